#include "exforge/judge.hpp"

#include <algorithm>
#include <array>
#include <cctype>


namespace exforge::judge {

using manifest::ExerciseManifest;
using manifest::ExerciseType;
using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 8> kOutcomeNames = {
    "accepted",     "wrong_answer", "compile_error", "runtime_error",
    "time_limit",   "memory_limit", "not_improved",  "payload_error"};

class ToyProgram final : public PreparedProgram {
 public:
  explicit ToyProgram(toy::Program p) : program_(std::move(p)) {}
  toy::RunResult run(std::string_view input, const toy::Limits& limits) const override {
    return toy::execute(program_, input, limits);
  }

 private:
  toy::Program program_;
};

TestResult run_one(const PreparedProgram& program, const manifest::TestCase& tc,
                   const manifest::TestSuite& suite) {
  TestResult r;
  r.name = tc.name;
  r.visibility = tc.visibility;
  r.expected = tc.expected_output;
  toy::RunResult rr;
  try {
    rr = program.run(tc.input, suite.limits);
  } catch (const std::exception& e) {
    rr.status = toy::RunStatus::RuntimeError;
    rr.error = toy::Diagnostic{0, 0, e.what()};
  }
  r.status = rr.status;
  r.error = std::move(rr.error);
  r.output = std::move(rr.output);
  r.metrics = std::move(rr.metrics);
  r.pass = r.status == toy::RunStatus::Ok &&
           normalize_output(r.output, suite.comparison) ==
               normalize_output(tc.expected_output, suite.comparison);
  return r;
}

Outcome failure_outcome(toy::RunStatus s) {
  switch (s) {
    case toy::RunStatus::Ok: return Outcome::WrongAnswer;
    case toy::RunStatus::RuntimeError: return Outcome::RuntimeError;
    case toy::RunStatus::StepLimit: return Outcome::TimeLimit;
    case toy::RunStatus::CellLimit: return Outcome::MemoryLimit;
  }
  return Outcome::WrongAnswer;
}

Verdict aggregate(std::vector<TestResult> results, bool deterministic) {
  Verdict v;
  v.deterministic_metrics = deterministic;
  std::optional<Outcome> first_failure;
  for (const auto& r : results) {
    v.metrics.steps = std::max(v.metrics.steps, r.metrics.steps);
    v.metrics.peak_cells = std::max(v.metrics.peak_cells, r.metrics.peak_cells);
    v.metrics.trace.insert(r.metrics.trace.begin(), r.metrics.trace.end());
    if (!r.pass) {
      if (!first_failure) first_failure = failure_outcome(r.status);
      if (!v.first_failed_public_test && r.visibility == manifest::Visibility::Public)
        v.first_failed_public_test = r.name;
    }
  }
  v.outcome = first_failure.value_or(Outcome::Accepted);
  v.per_test = std::move(results);
  return v;
}

void set_pass_fraction(Verdict& v, const manifest::TestSuite& suite) {
  double total = 0, passed = 0;
  for (std::size_t i = 0; i < suite.cases.size(); ++i) {
    total += suite.cases[i].weight;
    if (v.per_test[i].pass) passed += suite.cases[i].weight;
  }
  v.pass_fraction = total > 0 ? passed / total : 1.0;
}

Verdict compile_error(toy::Diagnostic d, bool deterministic) {
  Verdict v;
  v.outcome = Outcome::CompileError;
  v.diagnostic = std::move(d);
  v.deterministic_metrics = deterministic;
  return v;
}

template <bool Parallel>
Verdict run_tests(const assembly::ReconstructedProgram& program, const manifest::TestSuite& suite,
                  const Runner& runner) {
  Preparation prep = runner.prepare(program.source);
  if (prep.diagnostic) return compile_error(*prep.diagnostic, runner.deterministic_metrics());

  const auto n = static_cast<std::ptrdiff_t>(suite.cases.size());
  std::vector<TestResult> results(suite.cases.size());
  if constexpr (Parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) results[i] = run_one(*prep.program, suite.cases[i], suite);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) results[i] = run_one(*prep.program, suite.cases[i], suite);
  }
  Verdict v = aggregate(std::move(results), runner.deterministic_metrics());
  set_pass_fraction(v, suite);
  return v;
}

Verdict payload_error(const assembly::AssemblyError& e) {
  Verdict v;
  v.outcome = Outcome::PayloadError;
  v.payload_error = PayloadProblem{e.kind(), e.what()};
  return v;
}

json diag_json(const std::optional<toy::Diagnostic>& d) {
  return d ? json(d->render()) : json(nullptr);
}

}  // namespace

// ---- runners ---------------------------------------------------------------

Preparation ToyRunner::prepare(const std::string& source) const {
  try {
    return {std::make_unique<ToyProgram>(toy::compile(source)), std::nullopt};
  } catch (const toy::CompileError& e) {
    return {nullptr, e.diagnostic()};
  }
}

RunnerSet::RunnerSet() { runners_["toy"] = std::make_shared<ToyRunner>(); }

void RunnerSet::add_external(const std::string& name, ExternalConfig cfg) {
  runners_["external:" + name] = std::make_shared<ExternalRunner>(std::move(cfg));
}

const Runner& RunnerSet::for_language(const std::string& language) const {
  auto it = runners_.find(language);
  if (it == runners_.end()) throw std::out_of_range("no runner configured for language '" + language + "'");
  return *it->second;
}

// ---- comparison ------------------------------------------------------------

std::string normalize_output(std::string_view text, manifest::Comparison policy) {
  if (policy == manifest::Comparison::Exact) return std::string(text);
  std::vector<std::string> lines(1);
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\r' && i + 1 < text.size() && text[i + 1] == '\n') continue;
    if (text[i] == '\n')
      lines.emplace_back();
    else
      lines.back() += text[i];
  }
  for (auto& l : lines) {
    auto end = l.find_last_not_of(" \t\r\v\f");
    l.erase(end == std::string::npos ? 0 : end + 1);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out += '\n';
    out += lines[i];
  }
  return out;
}

// ---- static ----------------------------------------------------------------

std::string strip_comments(std::string_view source) {
  std::string out;
  out.reserve(source.size());
  bool in_comment = false;
  for (char c : source) {
    if (c == '\n') in_comment = false;
    else if (c == '#') in_comment = true;
    if (!in_comment) out += c;
  }
  return out;
}

std::optional<toy::Construct> default_construct(std::string_view token) {
  using toy::Construct;
  if (token == "while") return Construct::While;
  if (token == "if" || token == "else") return Construct::If;
  if (token == "read") return Construct::Read;
  if (token == "print") return Construct::Print;
  if (token == "alloc") return Construct::Alloc;
  if (token == "free") return Construct::Free;
  if (token == "=") return Construct::Assign;
  if (token == "[") return Construct::ArrayRef;
  return std::nullopt;
}

StaticReport run_static(std::string_view source, const manifest::ToolsConfig& checks,
                        const std::vector<manifest::KeywordSpec>& keyword_specs,
                        const std::optional<toy::Trace>& trace) {
  StaticReport r;
  const std::string stripped = strip_comments(source);
  r.effective_length = std::count_if(stripped.begin(), stripped.end(), [](char c) {
    return !std::isspace(static_cast<unsigned char>(c));
  });

  std::optional<std::vector<toy::Token>> tokens;
  try {
    tokens = toy::tokenize(source);
  } catch (const toy::CompileError&) {
  }

  std::set<std::string> present;
  if (tokens) {
    std::set<int> lines;
    for (const auto& t : *tokens) {
      lines.insert(t.line);
      present.insert(t.text);
    }
    r.line_count = static_cast<std::int64_t>(lines.size());
    r.token_count = static_cast<std::int64_t>(tokens->size());
  } else {
    std::size_t start = 0;
    while (start <= stripped.size()) {
      auto end = stripped.find('\n', start);
      if (end == std::string::npos) end = stripped.size();
      auto line = std::string_view(stripped).substr(start, end - start);
      if (line.find_first_not_of(" \t\r\v\f") != std::string_view::npos) ++r.line_count;
      start = end + 1;
    }
  }

  auto hit_for = [&](const std::string& tok, std::optional<toy::Construct> construct) {
    KeywordHit h;
    h.present_outside_comments = present.count(tok) > 0;
    h.executed = trace && construct && trace->count(*construct) > 0;
    return h;
  };
  for (const auto& c : checks.static_checks)
    if (c.kind == manifest::CheckKind::RequireToken)
      r.keyword_hits[c.token] = hit_for(c.token, default_construct(c.token));
  for (const auto& k : keyword_specs) r.keyword_hits[k.token] = hit_for(k.token, k.construct);

  for (const auto& c : checks.static_checks) {
    const bool has = present.count(c.token) > 0;
    if (c.kind == manifest::CheckKind::RequireToken && !has)
      r.violations.push_back("required token '" + c.token + "' missing");
    if (c.kind == manifest::CheckKind::ForbidToken && has)
      r.violations.push_back("forbidden token '" + c.token + "' found");
  }
  return r;
}

// ---- verdicts --------------------------------------------------------------

std::string_view outcome_name(Outcome o) { return kOutcomeNames[static_cast<std::size_t>(o)]; }

std::optional<Outcome> outcome_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kOutcomeNames.size(); ++i)
    if (kOutcomeNames[i] == name) return static_cast<Outcome>(i);
  return std::nullopt;
}

json verdict_to_json(const Verdict& v) {
  json j;
  j["outcome"] = std::string(outcome_name(v.outcome));
  if (v.diagnostic) j["diagnostic"] = v.diagnostic->render();
  if (v.payload_error)
    j["payload_error"] = {{"kind", std::string(assembly::error_kind_name(v.payload_error->kind))},
                          {"message", v.payload_error->message}};
  json tests = json::array();
  for (const auto& t : v.per_test) {
    json tj = {{"name", t.name}, {"pass", t.pass}};
    if (t.visibility == manifest::Visibility::Hidden) {
      tj["visibility"] = "hidden";
    } else {
      tj["visibility"] = "public";
      tj["status"] = std::string(toy::status_name(t.status));
      tj["error"] = diag_json(t.error);
      tj["output"] = t.output;
      tj["expected_output"] = t.expected;
    }
    tests.push_back(std::move(tj));
  }
  j["per_test"] = std::move(tests);
  j["pass_fraction"] = v.pass_fraction;
  if (v.baseline_pass_fraction) j["baseline_pass_fraction"] = *v.baseline_pass_fraction;

  json metrics = {{"deterministic", v.deterministic_metrics}};
  if (v.deterministic_metrics) {
    metrics["steps"] = v.metrics.steps;
    metrics["peak_cells"] = v.metrics.peak_cells;
    json trace = json::array();
    for (auto c : v.metrics.trace) trace.push_back(std::string(toy::construct_name(c)));
    metrics["trace"] = std::move(trace);
  } else {
    metrics["wall_ms"] = v.metrics.steps;
    metrics["rss_bytes"] = v.metrics.peak_cells;
  }
  j["metrics"] = std::move(metrics);

  const auto& s = v.static_report;
  json hits = json::object();
  for (const auto& [tok, h] : s.keyword_hits)
    hits[tok] = {{"present_outside_comments", h.present_outside_comments}, {"executed", h.executed}};
  j["static_report"] = {{"effective_length", s.effective_length},
                        {"line_count", s.line_count},
                        {"token_count", s.token_count},
                        {"keyword_hits", std::move(hits)},
                        {"violations", s.violations}};
  j["first_failed_public_test"] =
      v.first_failed_public_test ? json(*v.first_failed_public_test) : json(nullptr);
  return j;
}

Verdict run_dynamic(const assembly::ReconstructedProgram& program, const manifest::TestSuite& suite,
                    const Runner& runner) {
  return run_tests<true>(program, suite, runner);
}

Verdict run_dynamic_serial(const assembly::ReconstructedProgram& program,
                           const manifest::TestSuite& suite, const Runner& runner) {
  return run_tests<false>(program, suite, runner);
}

Verdict grade_quiz(const ExerciseManifest& m, const assembly::DirectAnswer& a) {
  const auto& in = m.instructions;
  auto out_of_range = [](const std::string& msg) {
    Verdict v;
    v.outcome = Outcome::PayloadError;
    v.payload_error = PayloadProblem{assembly::ErrorKind::OptionOutOfRange, msg};
    return v;
  };
  bool correct = false;
  if (const auto* lines = std::get_if<assembly::LineSet>(&a)) {
    const int n = manifest::line_count(in.snippet.value_or(""));
    for (int l : lines->lines)
      if (l < 1 || l > n)
        return out_of_range("line " + std::to_string(l) + " outside snippet lines 1.." + std::to_string(n));
    std::set<int> key;
    if (in.answer_key && in.answer_key->lines) key.insert(in.answer_key->lines->begin(), in.answer_key->lines->end());
    correct = lines->lines == key;
  } else {
    const auto idx = std::get<assembly::Choice>(a).index;
    const auto n = static_cast<std::int64_t>(in.choices ? in.choices->size() : 0);
    if (idx < 0 || idx >= n)
      return out_of_range("choice " + std::to_string(idx) + " outside 0.." + std::to_string(n - 1));
    correct = in.answer_key && in.answer_key->choice == idx;
  }
  Verdict v;
  v.outcome = correct ? Outcome::Accepted : Outcome::WrongAnswer;
  v.pass_fraction = correct ? 1.0 : 0.0;
  return v;
}

double BaselineCache::pass_fraction(const std::string& fingerprint,
                                    const std::function<double()>& compute) {
  std::shared_ptr<Entry> e;
  {
    std::lock_guard lock(mu_);
    auto& slot = entries_[fingerprint];
    if (!slot) slot = std::make_shared<Entry>();
    e = slot;
  }
  std::call_once(e->once, [&] { e->value = compute(); });
  return e->value;
}

Verdict grade_baseline(const ExerciseManifest& m, Verdict v, const Runner& runner,
                       BaselineCache& cache) {
  const double base = cache.pass_fraction(manifest::manifest_fingerprint(m), [&] {
    auto bv = run_dynamic(assembly::ReconstructedProgram{m.tests.baseline.value_or(""), {}},
                          m.tests, runner);
    return bv.outcome == Outcome::CompileError ? 0.0 : bv.pass_fraction;
  });
  v.baseline_pass_fraction = base;
  if (v.outcome == Outcome::CompileError) return v;
  const bool crashed_everywhere =
      !v.per_test.empty() && std::all_of(v.per_test.begin(), v.per_test.end(), [](const auto& t) {
        return t.status != toy::RunStatus::Ok;
      });
  if (crashed_everywhere) return v;
  if (v.pass_fraction > base)
    v.outcome = v.static_report.violations.empty() ? Outcome::Accepted : Outcome::WrongAnswer;
  else
    v.outcome = Outcome::NotImproved;
  return v;
}

Verdict judge_submission(const ExerciseManifest& m, const assembly::Payload& p,
                         const RunnerSet& runners, BaselineCache& cache) {
  assembly::Reconstruction rec;
  try {
    rec = assembly::reconstruct(m, p);
  } catch (const assembly::AssemblyError& e) {
    return payload_error(e);
  }
  if (const auto* answer = std::get_if<assembly::DirectAnswer>(&rec)) return grade_quiz(m, *answer);

  const auto& program = std::get<assembly::ReconstructedProgram>(rec);
  const Runner& runner = runners.for_language(m.metadata.language);
  Verdict v = run_dynamic(program, m.tests, runner);

  std::vector<manifest::KeywordSpec> specs;
  if (m.scoring.modes.meticulous) specs = m.scoring.modes.meticulous->keywords;
  std::optional<toy::Trace> trace;
  if (v.deterministic_metrics && v.outcome != Outcome::CompileError) trace = v.metrics.trace;
  v.static_report = run_static(program.source, m.tools, specs, trace);
  if (v.outcome == Outcome::Accepted && !v.static_report.violations.empty())
    v.outcome = Outcome::WrongAnswer;

  if (m.exercise_type == ExerciseType::Baseline) return grade_baseline(m, std::move(v), runner, cache);
  return v;
}

std::vector<Verdict> judge_batch(const ExerciseManifest& m,
                                 const std::vector<assembly::Payload>& payloads,
                                 const RunnerSet& runners, BaselineCache& cache) {
  std::vector<Verdict> out(payloads.size());
  const auto n = static_cast<std::ptrdiff_t>(payloads.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = judge_submission(m, payloads[i], runners, cache);
    } catch (const std::exception& e) {
      out[i].outcome = Outcome::RuntimeError;
      out[i].diagnostic = toy::Diagnostic{0, 0, e.what()};
    }
  }
  return out;
}

}  // namespace exforge::judge
