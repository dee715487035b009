// exforge command-line front end.
//
// Exit codes: 0 success / accepted, 1 rejection or validation failure,
// 2 usage, schema or I/O error.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "exforge/assembly.hpp"
#include "exforge/gamify.hpp"
#include "exforge/judge.hpp"
#include "exforge/manifest.hpp"
#include "exforge/service.hpp"
#include "exforge/stats.hpp"
#include "exforge/toylang.hpp"
#include "exforge/validate.hpp"
#include "httplib.h"
#include "json.hpp"

using namespace exforge;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

manifest::ExerciseManifest load_manifest(const std::string& path) {
  try {
    return manifest::parse_manifest(slurp(path));
  } catch (const manifest::SchemaError& e) {
    throw UsageError(path + ": " + e.what());
  }
}

// name=command-template pairs from --external.
judge::RunnerSet make_runners(const std::vector<std::string>& externals) {
  judge::RunnerSet runners;
  for (const auto& spec : externals) {
    auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--external expects name=command");
    runners.add_external(spec.substr(0, eq), {spec.substr(eq + 1)});
  }
  return runners;
}

int cmd_validate(const std::vector<std::string>& files, const judge::RunnerSet& runners) {
  int rc = 0;
  for (const auto& f : files) {
    auto m = load_manifest(f);
    auto report = manifest::validate_manifest(m, runners);
    if (report.ok()) {
      std::cout << f << ": ok\n";
      continue;
    }
    rc = 1;
    for (const auto& v : report.violations) std::cout << f << ": " << v << "\n";
  }
  return rc;
}

int cmd_judge(const std::string& manifest_path, const std::string& submission_path,
              const judge::RunnerSet& runners) {
  auto m = load_manifest(manifest_path);
  json sub;
  try {
    sub = json::parse(slurp(submission_path));
  } catch (const json::parse_error& e) {
    throw UsageError(submission_path + ": " + e.what());
  }
  if (!sub.is_object() || !sub.contains("payload"))
    throw UsageError(submission_path + ": \"payload\" required");
  assembly::Payload payload;
  try {
    payload = assembly::payload_from_json(sub["payload"]);
  } catch (const assembly::PayloadFormatError& e) {
    throw UsageError(submission_path + ": " + e.what());
  }
  judge::BaselineCache cache;
  auto v = judge::judge_submission(m, payload, runners, cache);
  std::cout << judge::verdict_to_json(v).dump(2) << "\n";
  return v.outcome == judge::Outcome::Accepted ? 0 : 1;
}

int cmd_run(const std::string& file, const std::string& input_path, const toy::Limits& limits) {
  const std::string source = slurp(file);
  const std::string input = input_path.empty() ? std::string() : slurp(input_path);
  toy::Program program;
  try {
    program = toy::compile(source);
  } catch (const toy::CompileError& e) {
    std::cerr << e.diagnostic().render() << "\n";
    return 1;
  }
  auto r = toy::execute(program, input, limits);
  std::cout << r.output;
  if (!r.output.empty() && r.output.back() != '\n') std::cout << "\n";
  if (r.status == toy::RunStatus::RuntimeError) std::cerr << r.error->render() << "\n";
  else if (r.status != toy::RunStatus::Ok) std::cerr << toy::status_name(r.status) << "\n";
  std::cout << "steps=" << r.metrics.steps << " peak_cells=" << r.metrics.peak_cells << "\n";
  return r.status == toy::RunStatus::Ok ? 0 : 1;
}

std::vector<stats::Event> load_log(const std::string& path) {
  if (!std::filesystem::exists(path)) throw UsageError("cannot read " + path);
  try {
    return stats::read_log(path);
  } catch (const stats::StorageError& e) {
    throw UsageError(e.what());
  }
}

int cmd_leaderboard(const std::string& log, const std::optional<std::string>& exercise, bool as_json) {
  auto rows = gamify::leaderboard(service::score_records(load_log(log)), exercise);
  if (as_json) {
    std::cout << gamify::board_to_json(rows).dump(2) << "\n";
    return 0;
  }
  std::printf("%-5s %-24s %8s %15s\n", "rank", "student", "total", "accepted_at");
  for (const auto& r : rows)
    std::printf("%-5lld %-24s %8lld %15lld\n", static_cast<long long>(r.rank), r.student.c_str(),
                static_cast<long long>(r.total), static_cast<long long>(r.accepted_at));
  return 0;
}

int cmd_serve(int port, const std::string& dir, const std::string& log, const judge::RunnerSet& runners,
              const std::string& host) {
  service::Registry reg;
  try {
    reg = service::load_registry(dir, runners);
  } catch (const service::RegistryError& e) {
    throw UsageError(e.what());
  }
  service::Service::Options opts;
  opts.exercises_dir = dir;
  if (const char* tok = std::getenv("EXFORGE_ADMIN_TOKEN")) opts.admin_token = tok;
  auto events = std::make_shared<stats::EventLog>(std::filesystem::path(log));
  service::Service svc(std::move(reg), events, runners, std::move(opts));
  httplib::Server server;
  service::mount(server, svc);
  std::cerr << "exforge: serving " << svc.registry()->size() << " exercises on " << host << ":" << port
            << "\n";
  if (!server.listen(host, port)) throw UsageError("cannot listen on port " + std::to_string(port));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exforge: programming-exercise assessment engine"};
  app.require_subcommand(1);

  std::vector<std::string> externals;
  auto add_external = [&](CLI::App* sub) {
    sub->add_option("--external", externals, "Register runner: name=command template with {source}");
  };

  std::vector<std::string> validate_files;
  auto* validate = app.add_subcommand("validate", "Check manifests, including judging the author solution");
  validate->add_option("manifest", validate_files)->required();
  add_external(validate);

  std::string manifest_path;
  std::uint64_t seed = 0;
  auto* present = app.add_subcommand("present", "Print the student bundle");
  present->add_option("manifest", manifest_path)->required();
  present->add_option("--seed", seed, "Block shuffle seed");

  std::string submission_path;
  auto* judge_cmd = app.add_subcommand("judge", "Judge a submission; prints the verdict");
  judge_cmd->add_option("manifest", manifest_path)->required();
  judge_cmd->add_option("submission", submission_path)->required();
  add_external(judge_cmd);

  std::string program_path, input_path;
  toy::Limits limits;
  auto* run = app.add_subcommand("run", "Run a toy program");
  run->add_option("file", program_path)->required();
  run->add_option("--input", input_path);
  run->add_option("--max-steps", limits.max_steps)->check(CLI::PositiveNumber);
  run->add_option("--max-cells", limits.max_cells)->check(CLI::PositiveNumber);

  std::string log_path;
  std::optional<std::string> exercise;
  bool as_json = false;
  auto* board = app.add_subcommand("leaderboard", "Rank students from an event log");
  board->add_option("log", log_path)->required();
  board->add_option("--exercise", exercise);
  board->add_flag("--json", as_json);

  std::string stats_exercise;
  auto* stats_cmd = app.add_subcommand("stats", "Per-exercise statistics from an event log");
  stats_cmd->add_option("log", log_path)->required();
  stats_cmd->add_option("--exercise", stats_exercise)->required();

  int port = 8080;
  std::string exercises_dir, host = "127.0.0.1";
  auto* serve = app.add_subcommand("serve", "Run the REST service");
  serve->add_option("--port", port);
  serve->add_option("--host", host);
  serve->add_option("--exercises", exercises_dir)->required();
  serve->add_option("--log", log_path)->required();
  add_external(serve);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    auto runners = make_runners(externals);
    if (*validate) return cmd_validate(validate_files, runners);
    if (*present) {
      std::cout << assembly::bundle_to_json(assembly::present(load_manifest(manifest_path), seed)).dump(2)
                << "\n";
      return 0;
    }
    if (*judge_cmd) return cmd_judge(manifest_path, submission_path, runners);
    if (*run) return cmd_run(program_path, input_path, limits);
    if (*board) return cmd_leaderboard(log_path, exercise, as_json);
    if (*stats_cmd) {
      std::cout << stats::stats_to_json(stats::compute_stats(load_log(log_path), stats_exercise)).dump(2)
                << "\n";
      return 0;
    }
    if (*serve) return cmd_serve(port, exercises_dir, log_path, runners, host);
  } catch (const UsageError& e) {
    std::cerr << "exforge: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "exforge: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
