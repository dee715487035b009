#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "exforge/gamify.hpp"
#include "fixtures.hpp"

using namespace exforge;
using namespace exforge::gamify;
using judge::Outcome;

namespace {

judge::Verdict judged(const std::string& exercise, const assembly::Payload& p) {
  judge::BaselineCache cache;
  return judge::judge_submission(fixtures::load(exercise), p, judge::RunnerSet{}, cache);
}

judge::Verdict judged(const std::string& exercise, const std::string& file_stem) {
  return judged(exercise, fixtures::submission(exercise, file_stem).payload());
}

References refs_of(const std::string& exercise) {
  auto m = fixtures::load(exercise);
  auto v = judge::run_dynamic({m.tests.solution, {}}, m.tests, judge::ToyRunner{});
  return {v.metrics.steps, v.metrics.peak_cells};
}

std::optional<ScoreRecord> score(const std::string& exercise, const judge::Verdict& v,
                                 const AttemptHistory& h = {}) {
  return score_submission(fixtures::load(exercise).scoring, v, h, refs_of(exercise), "ada", exercise, 1000);
}

Attempt wrong(const std::string& code) { return {fingerprint(assembly::CodePayload{code}), Outcome::WrongAnswer, 0}; }

// Real-valued reading of the slender rule, rounded half up.
std::int64_t slender_oracle(std::int64_t bonus, std::int64_t len_ref, std::int64_t len_max, std::int64_t L) {
  if (L <= len_ref) return bonus;
  if (L >= len_max) return 0;
  const double exact = static_cast<double>(bonus) * static_cast<double>(len_max - L) /
                       static_cast<double>(len_max - len_ref);
  return static_cast<std::int64_t>(std::floor(exact + 0.5));
}

judge::Verdict accepted_with_length(std::int64_t length) {
  judge::Verdict v;
  v.outcome = Outcome::Accepted;
  v.static_report.effective_length = length;
  return v;
}

}  // namespace

TEST(Fingerprint, SpacingAndCommentsDoNotMatter) {
  EXPECT_EQ(fingerprint(assembly::CodePayload{"x=1"}), fingerprint(assembly::CodePayload{"x = 1  # try"}));
  EXPECT_NE(fingerprint(assembly::CodePayload{"x=1"}), fingerprint(assembly::CodePayload{"x=2"}));
  EXPECT_EQ(fingerprint(assembly::BlankAnswers{{{"a", std::string("1")}}}),
            fingerprint(assembly::BlankAnswers{{{"a", std::string("1")}}}));
  EXPECT_NE(fingerprint(assembly::BlankAnswers{{{"a", std::string("1")}}}),
            fingerprint(assembly::BlankAnswers{{{"a", std::int64_t{1}}}}));
}

TEST(Fingerprint, UnlexableCodeFallsBackToText) {
  EXPECT_EQ(fingerprint(assembly::CodePayload{"x = $  # a"}), fingerprint(assembly::CodePayload{"x   =\n$"}));
  EXPECT_NE(fingerprint(assembly::CodePayload{"x = $"}), fingerprint(assembly::CodePayload{"x = @"}));
}

TEST(Fingerprint, CommentImmunityOnFixtures) {
  for (const auto& s : fixtures::submissions()) {
    if (s.body["payload"]["kind"] != "code") continue;
    const std::string src = s.body["payload"]["code"];
    std::string edited = "# header comment\n";
    for (char c : src) edited += c == '\n' ? std::string("   # note\n\n") : std::string(1, c);
    EXPECT_EQ(fingerprint(assembly::CodePayload{src}), fingerprint(assembly::CodePayload{edited})) << s.path;
  }
}

TEST(Slender, WorkedExample) {
  manifest::ScoringConfig cfg;
  cfg.modes.slender = manifest::SlenderConfig{10, 30, 20};
  auto r = score_submission(cfg, accepted_with_length(20), {}, {}, "s", "e", 0);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->bonuses.at("slender"), 10);
  EXPECT_EQ(r->total, 110);
}

TEST(Slender, MatchesRealValuedOracle) {
  std::mt19937_64 rng(5);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  for (int i = 0; i < 5000; ++i) {
    const std::int64_t len_ref = pick(0, 100), len_max = len_ref + pick(1, 100), bonus = pick(0, 50);
    const std::int64_t L = pick(0, 250);
    manifest::ScoringConfig cfg;
    cfg.modes.slender = manifest::SlenderConfig{len_ref, len_max, bonus};
    auto r = score_submission(cfg, accepted_with_length(L), {}, {}, "s", "e", 0);
    EXPECT_EQ(r->bonuses.at("slender"), slender_oracle(bonus, len_ref, len_max, L))
        << bonus << " " << len_ref << " " << len_max << " " << L;
  }
}

TEST(Slender, CommentsDoNotChangeBonusButCharactersDo) {
  const std::string src = fixtures::load("triangular").tests.solution;
  auto base = judged("triangular", assembly::CodePayload{src});
  auto padded = judged("triangular", assembly::CodePayload{"# golf?\n" + src + "\n\n   # done\n"});
  EXPECT_EQ(padded.static_report.effective_length, base.static_report.effective_length);
  EXPECT_EQ(score("triangular", padded)->bonuses.at("slender"), score("triangular", base)->bonuses.at("slender"));
}

TEST(Scout, FirstTryOnly) {
  auto v = judged("triangular", "accepted__loop");
  EXPECT_EQ(score("triangular", v)->bonuses.at("scout"), 10);
  EXPECT_EQ(score("triangular", v, {wrong("print 1")})->bonuses.at("scout"), 0);
}

TEST(Sedulous, ThreeDistinctFailuresEarnBonus) {
  auto v = judged("triangular", "accepted__loop");
  AttemptHistory h = {wrong("print 1"), wrong("print 2"), wrong("print 3")};
  auto r = score("triangular", v, h);
  EXPECT_EQ(r->bonuses.at("sedulous"), 15);
  EXPECT_EQ(r->bonuses.at("scout"), 0);
}

TEST(Sedulous, RepeatedFailureCountsOnce) {
  auto v = judged("triangular", "accepted__loop");
  AttemptHistory h = {wrong("print 1"), wrong("print  1 # again"), wrong("print 1")};
  EXPECT_EQ(honest_failures(h), 1);
  EXPECT_EQ(score("triangular", v, h)->bonuses.at("sedulous"), 0);
  h.pop_back();
  h.push_back(wrong("print 2"));
  EXPECT_EQ(score("triangular", v, h)->bonuses.at("sedulous"), 0);  // 2 distinct < 3
}

TEST(Sedulous, ScoutNeverCoGranted) {
  std::mt19937_64 rng(17);
  auto v = judged("triangular", "accepted__loop");
  for (int i = 0; i < 300; ++i) {
    AttemptHistory h;
    for (int k = std::uniform_int_distribution<int>(0, 5)(rng); k > 0; --k)
      h.push_back(wrong("print " + std::to_string(std::uniform_int_distribution<int>(0, 3)(rng))));
    for (std::int64_t min_attempts : {1, 2, 3}) {
      auto cfg = fixtures::load("triangular").scoring;
      cfg.modes.sedulous->min_attempts = min_attempts;
      auto r = score_submission(cfg, v, h, {}, "s", "e", 0);
      EXPECT_FALSE(r->bonuses.at("scout") > 0 && r->bonuses.at("sedulous") > 0);
    }
  }
}

TEST(Sprinter, InclusiveBoundary) {
  ASSERT_EQ(refs_of("countdown").ref_steps, 50);
  auto at = judged("countdown", "accepted__steps_100");
  auto over = judged("countdown", "accepted__steps_101");
  ASSERT_EQ(at.metrics.steps, 100);
  ASSERT_EQ(over.metrics.steps, 101);
  EXPECT_EQ(score("countdown", at)->bonuses.at("sprinter"), 10);
  EXPECT_EQ(score("countdown", over)->bonuses.at("sprinter"), 0);
}

TEST(Economic, InclusiveBoundary) {
  ASSERT_EQ(refs_of("countdown").ref_cells, 1);
  auto at = judged("countdown", "accepted__cells_2");
  auto over = judged("countdown", "accepted__cells_3");
  EXPECT_EQ(score("countdown", at)->bonuses.at("economic"), 10);
  EXPECT_EQ(score("countdown", over)->bonuses.at("economic"), 0);
}

TEST(Economic, MissingReferenceThrows) {
  auto v = judged("countdown", "accepted__cells_2");
  EXPECT_THROW(score_submission(fixtures::load("countdown").scoring, v, {}, {}, "s", "e", 0), MissingReference);
}

TEST(Meticulous, AntiCheat) {
  auto bonus = [](const std::string& stem) {
    auto v = judged("count-up", stem);
    EXPECT_EQ(v.outcome, Outcome::Accepted) << stem;
    return score("count-up", v)->bonuses.at("meticulous");
  };
  EXPECT_EQ(bonus("accepted__comment_only"), 0);
  EXPECT_EQ(bonus("accepted__void_context"), 0);
  EXPECT_EQ(bonus("accepted__genuine"), 10);
}

TEST(Score, OnlyAcceptedScores) {
  EXPECT_FALSE(score("triangular", judged("triangular", "wrong_answer__off_by_one")));
}

TEST(Score, BoundedBonusesOnFixtures) {
  for (const auto& s : fixtures::submissions()) {
    auto m = fixtures::load(s.exercise);
    auto v = judged(s.exercise, s.payload());
    if (v.outcome != Outcome::Accepted) continue;
    auto r = score_submission(m.scoring, v, {}, refs_of(s.exercise), "ada", s.exercise, 0);
    ASSERT_TRUE(r);
    const auto& md = m.scoring.modes;
    const std::map<std::string, std::int64_t> caps = {
        {"slender", md.slender ? md.slender->bonus : 0},
        {"sprinter", md.sprinter ? md.sprinter->bonus : 0},
        {"economic", md.economic ? md.economic->bonus : 0},
        {"sedulous", md.sedulous ? md.sedulous->bonus : 0},
        {"scout", md.scout ? md.scout->bonus : 0},
        {"meticulous", md.meticulous ? md.meticulous->bonus_per * static_cast<std::int64_t>(md.meticulous->keywords.size()) : 0}};
    std::int64_t sum = 0;
    for (const auto& [mode, points] : r->bonuses) {
      EXPECT_GE(points, 0);
      EXPECT_LE(points, caps.at(mode)) << mode;
      sum += points;
    }
    EXPECT_EQ(r->total, r->base + sum);
    EXPECT_GE(r->total, r->base);
  }
}

TEST(Record, JsonRoundTrip) {
  ScoreRecord r{"ada", "x", 100, {{"scout", 10}}, 110, 42};
  EXPECT_EQ(record_from_json(record_to_json(r)), r);
}

TEST(Leaderboard, TieBrokenByEarlierAcceptance) {
  std::vector<ScoreRecord> rs = {{"B", "x", 100, {}, 110, 20}, {"A", "x", 100, {}, 110, 10}};
  auto board = leaderboard(rs, "x");
  ASSERT_EQ(board.size(), 2u);
  EXPECT_EQ(board[0], (BoardRow{1, "A", 110, 10}));
  EXPECT_EQ(board[1], (BoardRow{2, "B", 110, 20}));
}

TEST(Leaderboard, EmptyAndBestKept) {
  EXPECT_TRUE(leaderboard({}, std::nullopt).empty());
  std::vector<ScoreRecord> rs = {{"A", "x", 100, {}, 100, 1}, {"A", "x", 100, {}, 120, 2}};
  auto board = leaderboard(rs, "x");
  ASSERT_EQ(board.size(), 1u);
  EXPECT_EQ(board[0].total, 120);
}

TEST(Leaderboard, GlobalSumsPerExerciseBests) {
  std::vector<ScoreRecord> rs = {{"A", "x", 100, {}, 100, 1}, {"A", "x", 100, {}, 130, 5},
                                 {"A", "y", 100, {}, 90, 3},  {"B", "y", 100, {}, 200, 9},
                                 {"B", "z", 100, {}, 50, 2}};
  auto board = leaderboard(rs, std::nullopt);
  ASSERT_EQ(board.size(), 2u);
  EXPECT_EQ(board[0], (BoardRow{1, "B", 250, 9}));
  EXPECT_EQ(board[1], (BoardRow{2, "A", 220, 5}));
  EXPECT_EQ(board_to_json(board)[0]["student"], "B");
}

TEST(Leaderboard, TotalOrderOnRandomRecords) {
  std::mt19937_64 rng(23);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<ScoreRecord> rs;
    std::set<std::string> students;
    for (int i = pick(0, 12); i > 0; --i) {
      std::string s(1, static_cast<char>('a' + pick(0, 5)));
      students.insert(s);
      rs.push_back({s, pick(0, 1) ? "x" : "y", 100, {}, pick(100, 104), pick(0, 5)});
    }
    for (const auto& scope : {std::optional<std::string>{}, std::optional<std::string>{"x"}}) {
      auto board = leaderboard(rs, scope);
      std::set<std::string> seen;
      for (std::size_t i = 0; i < board.size(); ++i) {
        EXPECT_EQ(board[i].rank, static_cast<std::int64_t>(i + 1));
        EXPECT_TRUE(seen.insert(board[i].student).second);
        if (i > 0) {
          const auto& a = board[i - 1];
          const auto& b = board[i];
          EXPECT_TRUE(a.total > b.total || (a.total == b.total && a.accepted_at < b.accepted_at) ||
                      (a.total == b.total && a.accepted_at == b.accepted_at && a.student < b.student));
        }
      }
      if (!scope) EXPECT_EQ(seen, students);
    }
  }
}
