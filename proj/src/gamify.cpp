#include "exforge/gamify.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "exforge/hash.hpp"

namespace exforge::gamify {

using nlohmann::json;

namespace {

std::string normalized_code(const std::string& code) {
  try {
    std::string out;
    for (const auto& t : toy::tokenize(code)) {
      if (!out.empty()) out += ' ';
      out += t.text;
    }
    return "tokens:" + out;
  } catch (const toy::CompileError&) {
  }
  std::string out;
  bool space = false;
  for (char c : judge::strip_comments(code)) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
      continue;
    }
    if (space && !out.empty()) out += ' ';
    space = false;
    out += c;
  }
  return "text:" + out;
}

// Rounded half-up: bonus * clamp((len_max - L) / (len_max - len_ref), 0, 1).
std::int64_t slender_bonus(const manifest::SlenderConfig& c, std::int64_t length) {
  const std::int64_t den = c.len_max - c.len_ref;
  const std::int64_t span = std::clamp<std::int64_t>(c.len_max - length, 0, den);
  return (2 * c.bonus * span + den) / (2 * den);
}

}  // namespace

json record_to_json(const ScoreRecord& r) {
  return {{"student", r.student},     {"exercise", r.exercise}, {"base", r.base},
          {"bonuses", r.bonuses},     {"total", r.total},       {"accepted_at", r.accepted_at}};
}

ScoreRecord record_from_json(const json& j) {
  ScoreRecord r;
  r.student = j.at("student").get<std::string>();
  r.exercise = j.at("exercise").get<std::string>();
  r.base = j.at("base").get<std::int64_t>();
  r.bonuses = j.at("bonuses").get<std::map<std::string, std::int64_t>>();
  r.total = j.at("total").get<std::int64_t>();
  r.accepted_at = j.at("accepted_at").get<std::int64_t>();
  return r;
}

std::string fingerprint(const assembly::Payload& p) {
  if (const auto* c = std::get_if<assembly::CodePayload>(&p)) return sha256_hex(normalized_code(c->code));
  return sha256_hex(assembly::payload_to_json(p).dump());
}

std::int64_t honest_failures(const AttemptHistory& h) {
  std::set<std::string> seen;
  std::int64_t n = 0;
  for (const auto& a : h) {
    const bool fresh = seen.insert(a.fingerprint).second;
    if (fresh && a.outcome != judge::Outcome::Accepted) ++n;
  }
  return n;
}

std::optional<ScoreRecord> score_submission(const manifest::ScoringConfig& cfg,
                                            const judge::Verdict& v, const AttemptHistory& h,
                                            const References& refs, const std::string& student,
                                            const std::string& exercise,
                                            std::int64_t accepted_at) {
  if (v.outcome != judge::Outcome::Accepted) return std::nullopt;
  const auto& modes = cfg.modes;
  ScoreRecord r{student, exercise, cfg.base_points, {}, 0, accepted_at};

  if (modes.slender)
    r.bonuses["slender"] = slender_bonus(*modes.slender, v.static_report.effective_length);

  if (v.deterministic_metrics) {
    if (modes.sprinter) {
      if (!refs.ref_steps) throw MissingReference("sprinter needs ref_steps");
      const bool fast = static_cast<double>(v.metrics.steps) <=
                        modes.sprinter->alpha * static_cast<double>(*refs.ref_steps);
      r.bonuses["sprinter"] = fast ? modes.sprinter->bonus : 0;
    }
    if (modes.economic) {
      if (!refs.ref_cells) throw MissingReference("economic needs ref_cells");
      const bool lean = static_cast<double>(v.metrics.peak_cells) <=
                        modes.economic->beta * static_cast<double>(*refs.ref_cells);
      r.bonuses["economic"] = lean ? modes.economic->bonus : 0;
    }
  }

  if (modes.sedulous)
    r.bonuses["sedulous"] =
        honest_failures(h) >= modes.sedulous->min_attempts ? modes.sedulous->bonus : 0;

  if (modes.scout) r.bonuses["scout"] = h.empty() ? modes.scout->bonus : 0;

  if (modes.meticulous) {
    std::int64_t hits = 0;
    for (const auto& k : modes.meticulous->keywords) {
      auto it = v.static_report.keyword_hits.find(k.token);
      if (it != v.static_report.keyword_hits.end() && it->second.present_outside_comments &&
          it->second.executed)
        ++hits;
    }
    r.bonuses["meticulous"] = hits * modes.meticulous->bonus_per;
  }

  r.total = r.base;
  for (const auto& [_, b] : r.bonuses) r.total += b;
  return r;
}

std::vector<BoardRow> leaderboard(const std::vector<ScoreRecord>& records,
                                  const std::optional<std::string>& exercise) {
  // Best record per (student, exercise): highest total, then earliest.
  std::map<std::pair<std::string, std::string>, const ScoreRecord*> best;
  for (const auto& r : records) {
    if (exercise && r.exercise != *exercise) continue;
    auto& slot = best[{r.student, r.exercise}];
    if (!slot || r.total > slot->total ||
        (r.total == slot->total && r.accepted_at < slot->accepted_at))
      slot = &r;
  }

  std::map<std::string, BoardRow> per_student;
  for (const auto& [key, rec] : best) {
    auto [it, fresh] = per_student.try_emplace(key.first, BoardRow{0, key.first, 0, rec->accepted_at});
    it->second.total += rec->total;
    // Global scope: the total was reached when the last counted best landed.
    if (!fresh) it->second.accepted_at = std::max(it->second.accepted_at, rec->accepted_at);
  }

  std::vector<BoardRow> rows;
  for (auto& [_, row] : per_student) rows.push_back(std::move(row));
  std::sort(rows.begin(), rows.end(), [](const BoardRow& a, const BoardRow& b) {
    if (a.total != b.total) return a.total > b.total;
    if (a.accepted_at != b.accepted_at) return a.accepted_at < b.accepted_at;
    return a.student < b.student;
  });
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].rank = static_cast<std::int64_t>(i + 1);
  return rows;
}

json board_to_json(const std::vector<BoardRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows)
    arr.push_back({{"rank", r.rank}, {"student", r.student}, {"total", r.total}, {"accepted_at", r.accepted_at}});
  return arr;
}

}  // namespace exforge::gamify
