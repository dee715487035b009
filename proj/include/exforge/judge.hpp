#pragma once

// Dynamic and static evaluation of submissions.
//
// Test cases of one submission are independent, so run_dynamic executes them
// with an OpenMP parallel loop; run_dynamic_serial is the reference loop the
// tests compare it against.

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "exforge/assembly.hpp"
#include "exforge/manifest.hpp"
#include "exforge/toylang.hpp"
#include "json.hpp"

namespace exforge::judge {

// ---- runners ---------------------------------------------------------------

/// A program ready to be run on many inputs. Must be safe to run concurrently.
///
/// Runners with deterministic_metrics() == false report wall-clock
/// milliseconds in metrics.steps and peak RSS bytes in metrics.peak_cells.
class PreparedProgram {
 public:
  virtual ~PreparedProgram() = default;
  virtual toy::RunResult run(std::string_view input, const toy::Limits& limits) const = 0;
};

struct Preparation {
  std::unique_ptr<const PreparedProgram> program;  // null iff diagnostic set
  std::optional<toy::Diagnostic> diagnostic;
};

class Runner {
 public:
  virtual ~Runner() = default;
  virtual bool deterministic_metrics() const = 0;
  virtual Preparation prepare(const std::string& source) const = 0;
};

class ToyRunner final : public Runner {
 public:
  bool deterministic_metrics() const override { return true; }
  Preparation prepare(const std::string& source) const override;
};

struct ExternalConfig {
  /// Shell command; `{source}` is replaced by the path of the source file.
  std::string command_template;
  std::string source_suffix = ".txt";
  int timeout_ms = 5000;
  std::size_t max_output_bytes = 16 << 20;
};

/// Runs a trusted author-configured command per test: source in a temporary
/// file, test input on stdin, stdout captured. Timeout maps to StepLimit,
/// a non-zero exit status to RuntimeError. No sandboxing.
class ExternalRunner final : public Runner {
 public:
  explicit ExternalRunner(ExternalConfig cfg) : cfg_(std::move(cfg)) {}
  bool deterministic_metrics() const override { return false; }
  Preparation prepare(const std::string& source) const override;

 private:
  ExternalConfig cfg_;
};

/// Language → runner. "toy" is always present.
class RunnerSet {
 public:
  RunnerSet();
  void add_external(const std::string& name, ExternalConfig cfg);
  /// Throws std::out_of_range for unconfigured languages.
  const Runner& for_language(const std::string& language) const;

 private:
  std::map<std::string, std::shared_ptr<const Runner>> runners_;
};

// ---- output comparison -----------------------------------------------------

/// exact: identity. trimmed: CRLF→LF, trailing whitespace stripped per line,
/// trailing blank lines dropped.
std::string normalize_output(std::string_view text, manifest::Comparison policy);

// ---- static analysis -------------------------------------------------------

struct KeywordHit {
  bool present_outside_comments = false;
  bool executed = false;
  bool operator==(const KeywordHit&) const = default;
};

struct StaticReport {
  std::int64_t effective_length = 0;
  std::int64_t line_count = 0;
  std::int64_t token_count = 0;
  std::map<std::string, KeywordHit> keyword_hits;
  std::vector<std::string> violations;
  bool operator==(const StaticReport&) const = default;
};

/// `#` to end of line removed.
std::string strip_comments(std::string_view source);

/// Construct a keyword token stands for, if any ("while" → WHILE, ...).
std::optional<toy::Construct> default_construct(std::string_view token);

StaticReport run_static(std::string_view source, const manifest::ToolsConfig& checks,
                        const std::vector<manifest::KeywordSpec>& keyword_specs,
                        const std::optional<toy::Trace>& trace);

// ---- verdicts --------------------------------------------------------------

enum class Outcome {
  Accepted,
  WrongAnswer,
  CompileError,
  RuntimeError,
  TimeLimit,
  MemoryLimit,
  NotImproved,
  PayloadError,
};

std::string_view outcome_name(Outcome o);
std::optional<Outcome> outcome_from_name(std::string_view name);

struct TestResult {
  std::string name;
  manifest::Visibility visibility = manifest::Visibility::Public;
  bool pass = false;
  toy::RunStatus status = toy::RunStatus::Ok;
  std::optional<toy::Diagnostic> error;
  std::string output;
  std::string expected;
  toy::RunMetrics metrics;
  bool operator==(const TestResult&) const = default;
};

struct PayloadProblem {
  assembly::ErrorKind kind;
  std::string message;
  bool operator==(const PayloadProblem&) const = default;
};

struct Verdict {
  Outcome outcome = Outcome::Accepted;
  std::optional<toy::Diagnostic> diagnostic;    // CompileError
  std::optional<PayloadProblem> payload_error;  // PayloadError
  std::vector<TestResult> per_test;
  double pass_fraction = 0.0;
  std::optional<double> baseline_pass_fraction;
  toy::RunMetrics metrics;  // max steps, max peak_cells, union of traces
  bool deterministic_metrics = true;
  StaticReport static_report;
  std::optional<std::string> first_failed_public_test;
  bool operator==(const Verdict&) const = default;
};

/// Public view: hidden tests carry name and pass/fail only.
nlohmann::json verdict_to_json(const Verdict& v);

/// Runs every test case (no fail-fast). Outcome reflects tests only; static
/// checks are folded in by judge_submission.
Verdict run_dynamic(const assembly::ReconstructedProgram& program,
                    const manifest::TestSuite& suite, const Runner& runner);
Verdict run_dynamic_serial(const assembly::ReconstructedProgram& program,
                           const manifest::TestSuite& suite, const Runner& runner);

Verdict grade_quiz(const manifest::ExerciseManifest& m, const assembly::DirectAnswer& a);

/// Baseline verdicts keyed by manifest fingerprint; each computed once.
class BaselineCache {
 public:
  double pass_fraction(const std::string& fingerprint, const std::function<double()>& compute);

 private:
  struct Entry {
    std::once_flag once;
    double value = 0.0;
  };
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Entry>> entries_;
};

Verdict grade_baseline(const manifest::ExerciseManifest& m, Verdict submission,
                       const Runner& runner, BaselineCache& cache);

/// reconstruct → dynamic/quiz → static → baseline. Never throws for payload
/// problems; those come back as Outcome::PayloadError.
Verdict judge_submission(const manifest::ExerciseManifest& m, const assembly::Payload& p,
                         const RunnerSet& runners, BaselineCache& cache);

/// Judges many submissions of one exercise in parallel.
std::vector<Verdict> judge_batch(const manifest::ExerciseManifest& m,
                                 const std::vector<assembly::Payload>& payloads,
                                 const RunnerSet& runners, BaselineCache& cache);

}  // namespace exforge::judge
