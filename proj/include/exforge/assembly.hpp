#pragma once

// Student-facing presentation of an exercise and reconstruction of a
// judgeable program (or a direct quiz answer) from a submission payload.

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "exforge/manifest.hpp"
#include "json.hpp"

namespace exforge::assembly {

struct CodePayload {
  std::string code;
  bool operator==(const CodePayload&) const = default;
};
struct BlankAnswers {
  std::map<std::string, manifest::BlankKey> answers;
  bool operator==(const BlankAnswers&) const = default;
};
struct LineSet {
  std::set<int> lines;
  bool operator==(const LineSet&) const = default;
};
struct Choice {
  std::int64_t index = 0;
  bool operator==(const Choice&) const = default;
};
struct BlockOrder {
  std::vector<std::string> order;
  bool operator==(const BlockOrder&) const = default;
};

using Payload = std::variant<CodePayload, BlankAnswers, LineSet, Choice, BlockOrder>;
using DirectAnswer = std::variant<LineSet, Choice>;

/// Malformed payload JSON (not a variant mismatch).
class PayloadFormatError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Tagged JSON: {"kind": "code"|"blanks"|"lines"|"choice"|"order", ...}.
Payload payload_from_json(const nlohmann::json& j);
nlohmann::json payload_to_json(const Payload& p);

enum class ErrorKind {
  PayloadMismatch,
  MissingBlank,
  UnknownBlock,
  IncompletePermutation,
  OptionOutOfRange,
};

std::string_view error_kind_name(ErrorKind k);  // snake_case

class AssemblyError : public std::runtime_error {
 public:
  AssemblyError(ErrorKind kind, std::string subject, const std::string& message);
  ErrorKind kind() const { return kind_; }
  const std::string& subject() const { return subject_; }

 private:
  ErrorKind kind_;
  std::string subject_;
};

struct SplicedBlank {
  std::string id;
  std::string text;
  bool operator==(const SplicedBlank&) const = default;
};

struct ReconstructedProgram {
  std::string source;
  std::vector<SplicedBlank> origin_map;
  bool operator==(const ReconstructedProgram&) const = default;
};

using Reconstruction = std::variant<ReconstructedProgram, DirectAnswer>;

/// Throws AssemblyError.
Reconstruction reconstruct(const manifest::ExerciseManifest& m, const Payload& p);

/// Payload built from the author's keys (blank keys, declared block order,
/// answer_key, or tests.solution).
Payload author_payload(const manifest::ExerciseManifest& m);

struct PublicTest {
  std::string name;
  std::string input;
  std::string expected_output;
};

struct PublicBlank {
  std::string id;
  std::optional<std::vector<std::string>> options;
};

struct StudentBundle {
  std::string id;
  std::string title;
  manifest::ExerciseType exercise_type;
  int difficulty = 1;
  std::string statement_md;
  bool allow_local_run = true;
  std::int64_t base_points = 0;
  std::vector<std::string> bonus_modes;  // only when reveal_bonuses
  std::optional<std::string> skeleton;
  std::optional<std::string> baseline;
  std::optional<std::vector<PublicBlank>> blanks;
  std::optional<std::vector<manifest::CodeBlock>> blocks;
  std::optional<std::string> snippet;
  std::optional<std::string> compiler_message;
  std::optional<std::vector<std::string>> choices;
  std::vector<PublicTest> public_tests;
};

StudentBundle present(const manifest::ExerciseManifest& m, std::uint64_t seed);

nlohmann::json bundle_to_json(const StudentBundle& b);

/// Deterministic Fisher-Yates permutation of [0, n) driven by mt19937_64.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

}  // namespace exforge::assembly
