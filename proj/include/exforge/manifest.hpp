#pragma once

// Exercise manifest: one JSON document per exercise carrying the four facets
// (metadata, instructions, tests, tools) plus scoring configuration.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "exforge/toylang.hpp"

namespace exforge::manifest {

enum class ExerciseType {
  FromScratch,
  Skeleton,
  FillBlanks,
  Baseline,
  FindBug,
  BugFix,
  CompileErrorQuiz,
  InterpretationQuiz,
  SortBlocks,
};

inline constexpr ExerciseType kAllExerciseTypes[] = {
    ExerciseType::FromScratch,      ExerciseType::Skeleton,
    ExerciseType::FillBlanks,       ExerciseType::Baseline,
    ExerciseType::FindBug,          ExerciseType::BugFix,
    ExerciseType::CompileErrorQuiz, ExerciseType::InterpretationQuiz,
    ExerciseType::SortBlocks,
};

std::string_view type_tag(ExerciseType t);
std::optional<ExerciseType> type_from_tag(std::string_view tag);

/// Types graded by comparing a direct answer with answer_key.
bool is_quiz(ExerciseType t);

struct Metadata {
  std::string author;
  std::vector<std::string> keywords;
  int difficulty = 1;
  std::string language = "toy";  // "toy" or "external:<name>"
  bool allow_local_run = true;
  bool reveal_bonuses = false;
  bool operator==(const Metadata&) const = default;
};

/// Author's reference for a blank: free text for open blanks, option index
/// for closed ones.
using BlankKey = std::variant<std::string, std::int64_t>;

struct Blank {
  std::string id;
  std::optional<std::vector<std::string>> options;  // closed blank iff set
  std::optional<BlankKey> key;
  bool closed() const { return options.has_value(); }
  bool operator==(const Blank&) const = default;
};

struct CodeBlock {
  std::string id;
  std::string code;
  bool operator==(const CodeBlock&) const = default;
};

struct AnswerKey {
  std::optional<std::vector<int>> lines;  // find_bug, 1-based, sorted, unique
  std::optional<std::int64_t> choice;     // choice quizzes
  bool operator==(const AnswerKey&) const = default;
};

struct Instructions {
  std::string statement_md;
  std::optional<std::string> skeleton;
  std::optional<std::vector<Blank>> blanks;
  std::optional<std::vector<CodeBlock>> blocks;
  std::optional<std::string> snippet;
  std::optional<std::string> compiler_message;
  std::optional<std::vector<std::string>> choices;
  std::optional<AnswerKey> answer_key;
  bool operator==(const Instructions&) const = default;
};

enum class Comparison { Exact, Trimmed };
enum class Visibility { Public, Hidden };

struct TestCase {
  std::string name;
  std::string input;
  std::string expected_output;
  double weight = 1.0;
  Visibility visibility = Visibility::Public;
  bool operator==(const TestCase&) const = default;
};

struct TestSuite {
  std::vector<TestCase> cases;
  std::string solution;
  std::optional<std::string> baseline;
  Comparison comparison = Comparison::Trimmed;
  toy::Limits limits;
  bool operator==(const TestSuite&) const = default;
};

struct SlenderConfig {
  std::int64_t len_ref = 0;
  std::int64_t len_max = 0;
  std::int64_t bonus = 0;
  bool operator==(const SlenderConfig&) const = default;
};
struct SprinterConfig {
  double alpha = 1.0;
  std::int64_t bonus = 0;
  bool operator==(const SprinterConfig&) const = default;
};
struct EconomicConfig {
  double beta = 1.0;
  std::int64_t bonus = 0;
  bool operator==(const EconomicConfig&) const = default;
};
struct SedulousConfig {
  std::int64_t min_attempts = 1;
  std::int64_t bonus = 0;
  bool operator==(const SedulousConfig&) const = default;
};
struct ScoutConfig {
  std::int64_t bonus = 0;
  bool operator==(const ScoutConfig&) const = default;
};
struct KeywordSpec {
  std::string token;
  toy::Construct construct;
  bool operator==(const KeywordSpec&) const = default;
};
struct MeticulousConfig {
  std::vector<KeywordSpec> keywords;
  std::int64_t bonus_per = 0;
  bool operator==(const MeticulousConfig&) const = default;
};

struct ScoringModes {
  std::optional<SlenderConfig> slender;
  std::optional<SprinterConfig> sprinter;
  std::optional<EconomicConfig> economic;
  std::optional<SedulousConfig> sedulous;
  std::optional<ScoutConfig> scout;
  std::optional<MeticulousConfig> meticulous;
  bool operator==(const ScoringModes&) const = default;
};

struct ScoringConfig {
  std::int64_t base_points = 100;
  ScoringModes modes;
  bool operator==(const ScoringConfig&) const = default;
};

enum class CheckKind { RequireToken, ForbidToken };

struct StaticCheck {
  CheckKind kind;
  std::string token;
  bool operator==(const StaticCheck&) const = default;
};

struct ToolsConfig {
  std::vector<StaticCheck> static_checks;
  bool operator==(const ToolsConfig&) const = default;
};

struct ExerciseManifest {
  std::string id;
  std::string title;
  ExerciseType exercise_type = ExerciseType::FromScratch;
  Metadata metadata;
  Instructions instructions;
  TestSuite tests;
  ScoringConfig scoring;
  ToolsConfig tools;
  bool operator==(const ExerciseManifest&) const = default;

  bool external() const { return metadata.language != "toy"; }
};

/// Raised by parse_manifest; `path()` names the offending field, e.g.
/// `tests.cases[1].weight`.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string path, const std::string& message);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

ExerciseManifest parse_manifest(std::string_view json_text);

/// Canonical form: sorted keys, 2-space indent, trailing newline.
std::string serialize_manifest(const ExerciseManifest& m);

/// SHA-256 (hex) of the canonical serialization.
std::string manifest_fingerprint(const ExerciseManifest& m);

/// Placeholder ids of the form `{{blank:<id>}}`, in order of appearance.
std::vector<std::string> placeholder_ids(std::string_view text);

std::string placeholder(std::string_view id);

/// Number of lines in `text` (a trailing newline does not open a new line).
int line_count(std::string_view text);

}  // namespace exforge::manifest
