#pragma once

// Gamification bonuses and leaderboards.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "exforge/assembly.hpp"
#include "exforge/judge.hpp"
#include "exforge/manifest.hpp"
#include "json.hpp"

namespace exforge::gamify {

struct ScoreRecord {
  std::string student;
  std::string exercise;
  std::int64_t base = 0;
  std::map<std::string, std::int64_t> bonuses;  // mode name → points
  std::int64_t total = 0;
  std::int64_t accepted_at = 0;                 // ms since epoch
  bool operator==(const ScoreRecord&) const = default;
};

nlohmann::json record_to_json(const ScoreRecord& r);
ScoreRecord record_from_json(const nlohmann::json& j);

struct Attempt {
  std::string fingerprint;
  judge::Outcome outcome = judge::Outcome::WrongAnswer;
  std::int64_t ts = 0;
};

/// Prior attempts of one student on one exercise, oldest first.
using AttemptHistory = std::vector<Attempt>;

/// Reference values the thresholds are measured against.
struct References {
  std::optional<std::int64_t> ref_steps;
  std::optional<std::int64_t> ref_cells;
};

class MissingReference : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Payload hash. Code is reduced to its token stream (comments and spacing
/// do not matter); unlexable code falls back to comment-stripped text with
/// whitespace runs collapsed. Other payloads hash their canonical JSON.
std::string fingerprint(const assembly::Payload& p);

/// Number of failed attempts whose fingerprint differs from every earlier one.
std::int64_t honest_failures(const AttemptHistory& h);

/// nullopt unless v.outcome is Accepted. Modes needing deterministic
/// metrics (sprinter, economic) are skipped for non-deterministic runners.
/// Throws MissingReference when an enabled mode lacks its reference value.
std::optional<ScoreRecord> score_submission(const manifest::ScoringConfig& cfg,
                                            const judge::Verdict& v, const AttemptHistory& h,
                                            const References& refs, const std::string& student,
                                            const std::string& exercise, std::int64_t accepted_at);

struct BoardRow {
  std::int64_t rank = 0;
  std::string student;
  std::int64_t total = 0;
  std::int64_t accepted_at = 0;
  bool operator==(const BoardRow&) const = default;
};

/// exercise = nullopt means global scope (sum of per-exercise bests).
std::vector<BoardRow> leaderboard(const std::vector<ScoreRecord>& records,
                                  const std::optional<std::string>& exercise);

nlohmann::json board_to_json(const std::vector<BoardRow>& rows);

}  // namespace exforge::gamify
