#include "exforge/service.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "exforge/assembly.hpp"
#include "exforge/hash.hpp"
#include "exforge/validate.hpp"

namespace exforge::service {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxStudentLength = 64;

Response error(int status, const std::string& message) { return {status, {{"error", message}}}; }

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw RegistryError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

gamify::References reference_metrics(const manifest::ExerciseManifest& m,
                                     const judge::RunnerSet& runners) {
  gamify::References refs;
  if (manifest::is_quiz(m.exercise_type)) return refs;
  const auto& runner = runners.for_language(m.metadata.language);
  if (!runner.deterministic_metrics()) return refs;
  auto v = judge::run_dynamic({m.tests.solution, {}}, m.tests, runner);
  if (v.outcome == judge::Outcome::CompileError) return refs;
  refs.ref_steps = v.metrics.steps;
  refs.ref_cells = v.metrics.peak_cells;
  return refs;
}

RegistryEntry make_entry(manifest::ExerciseManifest m, const judge::RunnerSet& runners) {
  auto report = manifest::validate_manifest(m, runners);
  if (!report.ok()) {
    std::string msg = m.id + ": ";
    for (std::size_t i = 0; i < report.violations.size(); ++i)
      msg += (i ? "; " : "") + report.violations[i];
    throw RegistryError(msg);
  }
  auto refs = reference_metrics(m, runners);
  return {std::move(m), refs};
}

Registry load_registry(const std::filesystem::path& dir, const judge::RunnerSet& runners) {
  const std::string suffix = ".exercise.json";
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
      files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  Registry reg;
  for (const auto& f : files) {
    manifest::ExerciseManifest m;
    try {
      m = manifest::parse_manifest(read_file(f));
    } catch (const manifest::SchemaError& e) {
      throw RegistryError(f.string() + ": " + e.what());
    }
    if (reg.count(m.id)) throw RegistryError(f.string() + ": duplicate exercise id '" + m.id + "'");
    auto id = m.id;
    reg.emplace(std::move(id), make_entry(std::move(m), runners));
  }
  return reg;
}

std::uint64_t presentation_seed(const std::string& student, const std::string& exercise) {
  return stable_hash64(student + '\n' + exercise);
}

Clock system_clock_ms() {
  return [] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  };
}

std::vector<gamify::ScoreRecord> score_records(const std::vector<stats::Event>& events) {
  std::vector<gamify::ScoreRecord> out;
  for (const auto& e : events) {
    if (e.kind != stats::EventKind::Judged) continue;
    auto it = e.detail.find("score");
    if (it != e.detail.end() && it->is_object()) out.push_back(gamify::record_from_json(*it));
  }
  return out;
}

gamify::AttemptHistory attempt_history(const std::vector<stats::Event>& events,
                                       const std::string& student, const std::string& exercise) {
  gamify::AttemptHistory h;
  for (const auto& e : events) {
    if (e.kind != stats::EventKind::Judged || e.student != student || e.exercise != exercise) continue;
    gamify::Attempt a;
    a.fingerprint = e.detail.value("fingerprint", "");
    a.outcome = judge::outcome_from_name(e.detail.value("outcome", "")).value_or(judge::Outcome::WrongAnswer);
    a.ts = e.ts;
    h.push_back(std::move(a));
  }
  return h;
}

Service::Service(Registry registry, std::shared_ptr<stats::EventLog> log, judge::RunnerSet runners,
                 Options options)
    : registry_(std::make_shared<const Registry>(std::move(registry))),
      log_(std::move(log)),
      runners_(std::move(runners)),
      options_(std::move(options)) {}

std::shared_ptr<const Registry> Service::registry() const {
  std::lock_guard lock(registry_mu_);
  return registry_;
}

Response Service::get_exercises() const {
  json list = json::array();
  for (const auto& [id, e] : *registry())
    list.push_back({{"id", id},
                    {"title", e.manifest.title},
                    {"exercise_type", std::string(manifest::type_tag(e.manifest.exercise_type))},
                    {"difficulty", e.manifest.metadata.difficulty}});
  return {200, std::move(list)};
}

Response Service::get_exercise(const std::string& id, const std::string& student) {
  auto reg = registry();
  auto it = reg->find(id);
  if (it == reg->end()) return error(404, "unknown exercise '" + id + "'");
  if (student.size() > kMaxStudentLength) return error(400, "student id longer than 64 characters");
  auto bundle = assembly::present(it->second.manifest, presentation_seed(student, id));

  if (!student.empty()) {
    std::lock_guard lock(intake_mu_);
    bool seen = false;
    for (const auto& e : log_->snapshot())
      seen = seen || (e.kind == stats::EventKind::Viewed && e.student == student && e.exercise == id);
    if (!seen) log_->append({0, stats::EventKind::Viewed, student, id, options_.clock(), json::object()});
  }
  return {200, assembly::bundle_to_json(bundle)};
}

Response Service::post_submission(const std::string& id, const std::string& body) {
  auto reg = registry();
  auto it = reg->find(id);
  if (it == reg->end()) return error(404, "unknown exercise '" + id + "'");
  const auto& entry = it->second;

  json req;
  try {
    req = json::parse(body);
  } catch (const json::parse_error& e) {
    return error(400, std::string("malformed JSON: ") + e.what());
  }
  if (!req.is_object() || !req.contains("student") || !req["student"].is_string())
    return error(400, "\"student\" must be a string");
  const std::string student = req["student"].get<std::string>();
  if (student.empty() || student.size() > kMaxStudentLength)
    return error(400, "student id must be 1..64 characters");
  if (!req.contains("payload")) return error(400, "\"payload\" required");
  assembly::Payload payload;
  try {
    payload = assembly::payload_from_json(req["payload"]);
  } catch (const assembly::PayloadFormatError& e) {
    return error(400, e.what());
  }

  judge::Verdict v = judge::judge_submission(entry.manifest, payload, runners_, baseline_cache_);
  if (v.outcome == judge::Outcome::PayloadError)
    return {400,
            {{"error", v.payload_error->message},
             {"kind", std::string(assembly::error_kind_name(v.payload_error->kind))},
             {"verdict", judge::verdict_to_json(v)}}};

  const std::string fp = gamify::fingerprint(payload);
  std::optional<gamify::ScoreRecord> score;
  std::int64_t submission_seq = 0;
  {
    std::lock_guard lock(intake_mu_);
    const std::int64_t now = options_.clock();
    auto history = attempt_history(log_->snapshot(), student, id);
    try {
      score = gamify::score_submission(entry.manifest.scoring, v, history, entry.refs, student, id, now);
    } catch (const gamify::MissingReference& e) {
      return error(500, e.what());
    }
    json submitted = {{"fingerprint", fp}};
    json judged = {{"submission", 0},
                   {"outcome", std::string(judge::outcome_name(v.outcome))},
                   {"fingerprint", fp},
                   {"deterministic", v.deterministic_metrics},
                   {"steps", v.metrics.steps},
                   {"peak_cells", v.metrics.peak_cells},
                   {"score", score ? gamify::record_to_json(*score) : json(nullptr)}};
    auto seqs = log_->append_batch({{0, stats::EventKind::Submitted, student, id, now, std::move(submitted)},
                                    {0, stats::EventKind::Judged, student, id, now, std::move(judged)}});
    submission_seq = seqs.front();
  }

  json score_json = nullptr;
  if (score) {
    score_json = gamify::record_to_json(*score);
    if (!entry.manifest.metadata.reveal_bonuses) score_json.erase("bonuses");
  }
  return {200, {{"submission", submission_seq}, {"verdict", judge::verdict_to_json(v)}, {"score", score_json}}};
}

Response Service::get_leaderboard(const std::optional<std::string>& id) const {
  if (id) {
    auto reg = registry();
    if (!reg->count(*id)) return error(404, "unknown exercise '" + *id + "'");
  }
  return {200, gamify::board_to_json(gamify::leaderboard(score_records(log_->snapshot()), id))};
}

Response Service::get_stats(const std::string& id) const {
  auto reg = registry();
  if (!reg->count(id)) return error(404, "unknown exercise '" + id + "'");
  return {200, stats::stats_to_json(stats::compute_stats(log_->snapshot(), id))};
}

Response Service::put_exercise(const std::string& id, const std::string& body,
                               const std::string& authorization) {
  if (options_.admin_token.empty()) return error(403, "authoring disabled: EXFORGE_ADMIN_TOKEN not set");
  if (authorization != "Bearer " + options_.admin_token) return error(401, "invalid admin token");
  manifest::ExerciseManifest m;
  try {
    m = manifest::parse_manifest(body);
  } catch (const manifest::SchemaError& e) {
    return {400, {{"error", e.what()}, {"path", e.path()}}};
  }
  if (m.id != id) return error(400, "manifest id '" + m.id + "' does not match path '" + id + "'");
  auto report = manifest::validate_manifest(m, runners_);
  if (!report.ok()) return {400, {{"error", "validation failed"}, {"violations", report.violations}}};

  if (options_.exercises_dir) {
    auto path = *options_.exercises_dir / (id + ".exercise.json");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << manifest::serialize_manifest(m);
    if (!out) return error(500, "cannot write " + path.string());
  }
  auto refs = reference_metrics(m, runners_);
  std::lock_guard lock(registry_mu_);
  auto next = std::make_shared<Registry>(*registry_);
  (*next)[id] = RegistryEntry{std::move(m), refs};
  registry_ = std::move(next);
  return {200, {{"id", id}}};
}

}  // namespace exforge::service
