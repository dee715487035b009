#include <gtest/gtest.h>

#include <random>

#include "exforge/manifest.hpp"
#include "exforge/validate.hpp"
#include "fixtures.hpp"

using namespace exforge;
using namespace exforge::manifest;
using nlohmann::json;

namespace {

json minimal() {
  return {{"id", "hello"},
          {"exercise_type", "from_scratch"},
          {"instructions", {{"statement_md", "Print 1."}}},
          {"tests", {{"cases", {{{"name", "one"}, {"expected_output", "1\n"}}}}, {"solution", "print 1\n"}}}};
}

std::string schema_error_path(const json& j) {
  try {
    parse_manifest(j.dump());
  } catch (const SchemaError& e) {
    return e.path();
  }
  return "<accepted>";
}

std::vector<std::string> violations(const ExerciseManifest& m) {
  return validate_manifest(m, judge::RunnerSet{}).violations;
}

bool has(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

// Random structurally valid manifests for the round-trip property.
ExerciseManifest random_manifest(std::mt19937_64& rng) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto word = [&] {
    std::string s;
    for (int i = pick(1, 8); i > 0; --i) s += static_cast<char>('a' + pick(0, 25));
    return s;
  };
  auto text = [&] {
    static const char* alphabet[] = {"a", "b", " ", "\n", "\t", "\"", "\\", "{", "}", "#", "é", "0"};
    std::string s;
    for (int i = pick(0, 20); i > 0; --i) s += alphabet[pick(0, 11)];
    return s;
  };

  ExerciseManifest m;
  m.id = word() + "-" + std::to_string(pick(0, 99));
  m.title = text();
  m.exercise_type = kAllExerciseTypes[static_cast<std::size_t>(pick(0, 8))];
  m.metadata.author = text();
  for (int i = pick(0, 3); i > 0; --i) m.metadata.keywords.push_back(word());
  m.metadata.difficulty = pick(1, 5);
  m.metadata.language = pick(0, 3) ? "toy" : "external:" + word();
  m.metadata.allow_local_run = pick(0, 1);
  m.metadata.reveal_bonuses = pick(0, 1);

  auto& in = m.instructions;
  in.statement_md = text();
  if (pick(0, 1)) {
    std::vector<Blank> blanks;
    std::string skel;
    for (int i = pick(0, 3); i > 0; --i) {
      Blank b;
      b.id = "b" + std::to_string(i);
      if (pick(0, 1)) {
        b.options = std::vector<std::string>{word(), word(), word()};
        if (pick(0, 1)) b.key = std::int64_t{pick(0, 2)};
      } else if (pick(0, 1)) {
        b.key = word();
      }
      skel += "x = " + placeholder(b.id) + "\n";
      blanks.push_back(std::move(b));
    }
    in.skeleton = skel + text();
    if (!blanks.empty()) in.blanks = std::move(blanks);
  }
  if (pick(0, 1)) {
    in.blocks = std::vector<CodeBlock>{};
    for (int i = pick(1, 4); i > 0; --i) in.blocks->push_back({"k" + std::to_string(i), text()});
  }
  if (pick(0, 1)) in.snippet = text();
  if (pick(0, 1)) in.compiler_message = text();
  if (pick(0, 1)) in.choices = std::vector<std::string>{text(), text()};
  if (pick(0, 1)) {
    AnswerKey k;
    if (pick(0, 1)) k.lines = std::vector<int>{1, pick(2, 5)};
    if (pick(0, 1)) k.choice = pick(0, 1);
    in.answer_key = k;
  }

  for (int i = pick(0, 4); i > 0; --i)
    m.tests.cases.push_back({"t" + std::to_string(i), text(), text(), pick(1, 40) / 8.0,
                             pick(0, 1) ? Visibility::Public : Visibility::Hidden});
  m.tests.solution = text();
  if (pick(0, 1)) m.tests.baseline = text();
  m.tests.comparison = pick(0, 1) ? Comparison::Exact : Comparison::Trimmed;
  m.tests.limits = {pick(1, 1'000'000), pick(1, 10'000)};

  auto& modes = m.scoring.modes;
  m.scoring.base_points = pick(0, 500);
  if (pick(0, 1)) modes.slender = SlenderConfig{pick(0, 50), pick(51, 200), pick(0, 30)};
  if (pick(0, 1)) modes.sprinter = SprinterConfig{1.0 + pick(0, 16) / 4.0, pick(0, 30)};
  if (pick(0, 1)) modes.economic = EconomicConfig{1.0 + pick(0, 16) / 8.0, pick(0, 30)};
  if (pick(0, 1)) modes.sedulous = SedulousConfig{pick(1, 5), pick(0, 30)};
  if (pick(0, 1)) modes.scout = ScoutConfig{pick(0, 30)};
  if (pick(0, 1))
    modes.meticulous = MeticulousConfig{{{"while", toy::Construct::While}, {word(), toy::Construct::Print}},
                                        pick(0, 30)};
  for (int i = pick(0, 2); i > 0; --i)
    m.tools.static_checks.push_back({pick(0, 1) ? CheckKind::RequireToken : CheckKind::ForbidToken, word()});
  return m;
}

}  // namespace

TEST(Parse, MinimalManifestGetsDefaults) {
  auto m = parse_manifest(minimal().dump());
  EXPECT_EQ(m.id, "hello");
  EXPECT_EQ(m.metadata.difficulty, 1);
  EXPECT_EQ(m.metadata.language, "toy");
  EXPECT_TRUE(m.metadata.allow_local_run);
  EXPECT_FALSE(m.metadata.reveal_bonuses);
  EXPECT_EQ(m.tests.comparison, Comparison::Trimmed);
  EXPECT_EQ(m.tests.limits, toy::Limits{});
  ASSERT_EQ(m.tests.cases.size(), 1u);
  EXPECT_EQ(m.tests.cases[0].weight, 1.0);
  EXPECT_EQ(m.tests.cases[0].visibility, Visibility::Public);
  EXPECT_EQ(m.scoring.base_points, 100);
}

TEST(Parse, IllegalIdCharacter) {
  auto j = minimal();
  j["id"] = "X Y";
  EXPECT_EQ(schema_error_path(j), "id");
}

TEST(Parse, ErrorPathsNameTheField) {
  auto j = minimal();
  j["tests"]["cases"][0]["weight"] = 0;
  EXPECT_EQ(schema_error_path(j), "tests.cases[0].weight");

  j = minimal();
  j["metadata"] = {{"difficulty", 6}};
  EXPECT_EQ(schema_error_path(j), "metadata.difficulty");

  j = minimal();
  j["surprise"] = 1;
  EXPECT_EQ(schema_error_path(j), "surprise");

  j = minimal();
  j["exercise_type"] = "keyword_use";
  EXPECT_EQ(schema_error_path(j), "exercise_type");

  j = minimal();
  j["scoring"] = {{"modes", {{"slender", {{"len_ref", 30}, {"len_max", 30}, {"bonus", 5}}}}}};
  EXPECT_NE(schema_error_path(j).find("scoring.modes.slender"), std::string::npos);

  j = minimal();
  j["scoring"] = {{"modes", {{"sprinter", {{"alpha", 0.5}, {"bonus", 5}}}}}};
  EXPECT_EQ(schema_error_path(j), "scoring.modes.sprinter.alpha");
}

TEST(Parse, NotJson) { EXPECT_THROW(parse_manifest("{"), SchemaError); }

TEST(Parse, PlaceholdersMustMatchBlanks) {
  auto j = minimal();
  j["exercise_type"] = "fill_blanks";
  j["instructions"]["skeleton"] = "x = {{blank:a}}\nprint x";
  j["instructions"]["blanks"] = {{{"id", "a"}, {"key", "1"}}};
  EXPECT_NO_THROW(parse_manifest(j.dump()));

  auto missing_entry = j;
  missing_entry["instructions"]["skeleton"] = "x = {{blank:a}} + {{blank:b}}";
  EXPECT_THROW(parse_manifest(missing_entry.dump()), SchemaError);

  auto missing_placeholder = j;
  missing_placeholder["instructions"]["blanks"].push_back({{"id", "z"}, {"key", "2"}});
  EXPECT_THROW(parse_manifest(missing_placeholder.dump()), SchemaError);

  auto blanks_without_skeleton = j;
  blanks_without_skeleton["instructions"].erase("skeleton");
  EXPECT_THROW(parse_manifest(blanks_without_skeleton.dump()), SchemaError);
}

TEST(Parse, ClosedBlankKeyMustBeInRange) {
  auto j = minimal();
  j["instructions"]["skeleton"] = "x = {{blank:a}}";
  j["instructions"]["blanks"] = {{{"id", "a"}, {"options", {"1", "2"}}, {"key", 2}}};
  EXPECT_EQ(schema_error_path(j), "instructions.blanks[0].key");
  j["instructions"]["blanks"][0]["options"] = {"1"};
  j["instructions"]["blanks"][0]["key"] = 0;
  EXPECT_EQ(schema_error_path(j), "instructions.blanks[0].options");
}

TEST(Parse, PlaceholderIds) {
  EXPECT_EQ(placeholder_ids("a {{blank:x}} b {{blank:y_2}} {{blank:}}"),
            (std::vector<std::string>{"x", "y_2"}));
  EXPECT_EQ(line_count("a\nb\n"), 2);
  EXPECT_EQ(line_count("a\nb"), 2);
  EXPECT_EQ(line_count(""), 0);
}

TEST(Serialize, RoundTripOnRandomManifests) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 500; ++i) {
    auto m = random_manifest(rng);
    const auto text = serialize_manifest(m);
    ExerciseManifest back;
    ASSERT_NO_THROW(back = parse_manifest(text)) << text;
    EXPECT_EQ(back, m) << text;
    EXPECT_EQ(serialize_manifest(back), text);
  }
}

TEST(Serialize, FingerprintTracksContent) {
  auto a = parse_manifest(minimal().dump());
  auto b = a;
  EXPECT_EQ(manifest_fingerprint(a), manifest_fingerprint(b));
  b.tests.solution += " ";
  EXPECT_NE(manifest_fingerprint(a), manifest_fingerprint(b));
  EXPECT_EQ(manifest_fingerprint(a).size(), 64u);
}

TEST(Validate, EveryFixturePasses) {
  auto files = fixtures::exercise_files();
  ASSERT_GE(files.size(), 9u);
  std::set<ExerciseType> types;
  for (const auto& f : files) {
    SCOPED_TRACE(f.string());
    auto m = parse_manifest(fixtures::slurp(f));
    EXPECT_EQ(f.filename().string(), m.id + ".exercise.json");
    EXPECT_EQ(violations(m), std::vector<std::string>{});
    types.insert(m.exercise_type);
  }
  EXPECT_EQ(types.size(), std::size(kAllExerciseTypes));
}

TEST(Validate, SkeletonRequired) {
  auto m = fixtures::load("pairwise-max");
  m.instructions.skeleton.reset();
  EXPECT_TRUE(has(violations(m), "instructions.skeleton required"));
}

TEST(Validate, SolutionFailingHiddenTest) {
  auto m = fixtures::load("triangular");
  m.tests.cases[1].expected_output = "1\n3\n6\n";
  EXPECT_TRUE(has(violations(m), "solution fails test seven"));
}

TEST(Validate, BaselineThatAlreadyPasses) {
  auto m = fixtures::load("absolute-values");
  m.tests.baseline = m.tests.solution;
  EXPECT_TRUE(has(violations(m), "baseline already passes all tests"));
}

TEST(Validate, BugFixSkeletonMustBeBroken) {
  auto m = fixtures::load("factorial-fix");
  m.instructions.skeleton = m.tests.solution;
  EXPECT_TRUE(has(violations(m), "instructions.skeleton already passes all tests"));
}

TEST(Validate, QuizRequirements) {
  auto m = fixtures::load("missing-brace");
  m.instructions.compiler_message = "line 1, col 1: expected '}'";
  EXPECT_FALSE(violations(m).empty());

  m = fixtures::load("find-the-bug");
  m.instructions.answer_key->lines = std::vector<int>{99};
  EXPECT_FALSE(violations(m).empty());

  m = fixtures::load("trace-output");
  m.instructions.answer_key.reset();
  EXPECT_TRUE(has(violations(m), "instructions.answer_key required"));
}

TEST(Validate, SortBlocksNeedsTwoBlocks) {
  auto m = fixtures::load("squares-blocks");
  m.instructions.blocks->resize(1);
  EXPECT_FALSE(violations(m).empty());
}

TEST(Validate, StaticCheckViolatedBySolution) {
  auto m = fixtures::load("triangular");
  m.tools.static_checks.push_back({CheckKind::ForbidToken, "while"});
  auto v = violations(m);
  ASSERT_FALSE(v.empty());
  EXPECT_NE(v[0].find("forbidden token 'while' found"), std::string::npos);
}

TEST(Validate, InterpretationQuizKeysMatchSnippetOutput) {
  // the keyed choice of every interpretation quiz is what the snippet prints
  for (const auto& f : fixtures::exercise_files()) {
    auto m = parse_manifest(fixtures::slurp(f));
    if (m.exercise_type != ExerciseType::InterpretationQuiz) continue;
    auto r = toy::execute(toy::compile(*m.instructions.snippet), "", m.tests.limits);
    const auto& choice = m.instructions.choices->at(static_cast<std::size_t>(*m.instructions.answer_key->choice));
    EXPECT_EQ(r.output, choice + "\n") << m.id;
  }
}
