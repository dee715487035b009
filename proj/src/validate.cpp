#include "exforge/validate.hpp"

#include <set>

namespace exforge::manifest {

namespace {

enum Field : unsigned {
  kSkeleton = 1u << 0,
  kBlanks = 1u << 1,
  kBlocks = 1u << 2,
  kSnippet = 1u << 3,
  kCompilerMessage = 1u << 4,
  kChoices = 1u << 5,
  kAnswerKey = 1u << 6,
};

struct FieldRule {
  unsigned required;
  unsigned allowed;  // superset of required
};

FieldRule rule_for(ExerciseType t) {
  switch (t) {
    case ExerciseType::FromScratch: return {0, 0};
    case ExerciseType::Skeleton: return {kSkeleton, kSkeleton | kBlanks};
    case ExerciseType::FillBlanks: return {kSkeleton | kBlanks, kSkeleton | kBlanks};
    case ExerciseType::Baseline: return {0, kSkeleton};
    case ExerciseType::FindBug: return {kSnippet | kAnswerKey, kSnippet | kAnswerKey};
    case ExerciseType::BugFix: return {kSkeleton, kSkeleton};
    case ExerciseType::CompileErrorQuiz: {
      unsigned f = kSnippet | kCompilerMessage | kChoices | kAnswerKey;
      return {f, f};
    }
    case ExerciseType::InterpretationQuiz: {
      unsigned f = kSnippet | kChoices | kAnswerKey;
      return {f, f};
    }
    case ExerciseType::SortBlocks: return {kBlocks, kBlocks};
  }
  return {0, 0};
}

unsigned present_fields(const Instructions& in) {
  unsigned f = 0;
  if (in.skeleton) f |= kSkeleton;
  if (in.blanks) f |= kBlanks;
  if (in.blocks) f |= kBlocks;
  if (in.snippet) f |= kSnippet;
  if (in.compiler_message) f |= kCompilerMessage;
  if (in.choices) f |= kChoices;
  if (in.answer_key) f |= kAnswerKey;
  return f;
}

constexpr std::pair<Field, const char*> kFieldNames[] = {
    {kSkeleton, "skeleton"}, {kBlanks, "blanks"},   {kBlocks, "blocks"},
    {kSnippet, "snippet"},   {kCompilerMessage, "compiler_message"},
    {kChoices, "choices"},   {kAnswerKey, "answer_key"},
};

bool dynamic_type(ExerciseType t) { return !is_quiz(t); }

}  // namespace

ValidationReport validate_manifest(const ExerciseManifest& m, const judge::RunnerSet& runners) {
  ValidationReport rep;
  auto add = [&](std::string v) { rep.violations.push_back(std::move(v)); };
  const auto& in = m.instructions;
  const auto tag = std::string(type_tag(m.exercise_type));

  const FieldRule rule = rule_for(m.exercise_type);
  const unsigned have = present_fields(in);
  for (auto [bit, name] : kFieldNames) {
    if ((rule.required & bit) && !(have & bit)) add(std::string("instructions.") + name + " required");
    if (!(rule.allowed & bit) && (have & bit))
      add(std::string("instructions.") + name + " not used by " + tag);
  }

  if (m.exercise_type == ExerciseType::FillBlanks && in.blanks && in.blanks->empty())
    add("instructions.blanks must declare at least one blank");
  if (in.blanks && (m.exercise_type == ExerciseType::FillBlanks || m.exercise_type == ExerciseType::Skeleton))
    for (std::size_t i = 0; i < in.blanks->size(); ++i)
      if (!(*in.blanks)[i].key) add("instructions.blanks[" + std::to_string(i) + "].key required");
  if (m.exercise_type == ExerciseType::SortBlocks && in.blocks && in.blocks->size() < 2)
    add("instructions.blocks requires at least 2 blocks");

  if (m.exercise_type == ExerciseType::FindBug && in.answer_key) {
    if (!in.answer_key->lines || in.answer_key->lines->empty()) {
      add("instructions.answer_key.lines required");
    } else {
      const int n = line_count(in.snippet.value_or(""));
      for (int l : *in.answer_key->lines)
        if (l > n) add("instructions.answer_key.lines: line " + std::to_string(l) + " beyond snippet");
    }
  }
  if ((m.exercise_type == ExerciseType::CompileErrorQuiz ||
       m.exercise_type == ExerciseType::InterpretationQuiz) &&
      in.answer_key) {
    const auto n = static_cast<std::int64_t>(in.choices ? in.choices->size() : 0);
    if (!in.answer_key->choice)
      add("instructions.answer_key.choice required");
    else if (*in.answer_key->choice >= n)
      add("instructions.answer_key.choice out of range");
    if (in.choices && in.choices->size() < 2) add("instructions.choices needs at least 2 choices");
  }
  if (m.exercise_type == ExerciseType::CompileErrorQuiz && in.snippet && in.compiler_message &&
      !m.external()) {
    try {
      toy::compile(*in.snippet);
      add("instructions.snippet compiles without error");
    } catch (const toy::CompileError& e) {
      if (e.diagnostic().render() != *in.compiler_message)
        add("instructions.compiler_message does not match diagnostic '" + e.diagnostic().render() + "'");
    }
  }

  if (dynamic_type(m.exercise_type)) {
    if (m.tests.cases.empty()) add("tests.cases required");
    std::set<std::string> names;
    for (const auto& c : m.tests.cases)
      if (!names.insert(c.name).second) add("duplicate test name '" + c.name + "'");
  }
  if (m.exercise_type == ExerciseType::Baseline && !m.tests.baseline) add("tests.baseline required");
  if (m.exercise_type != ExerciseType::Baseline && m.tests.baseline)
    add("tests.baseline not used by " + tag);

  if (m.scoring.modes.meticulous && m.scoring.modes.meticulous->keywords.empty())
    add("scoring.modes.meticulous.keywords must not be empty");

  if (!rep.ok()) return rep;

  const judge::Runner* runner = nullptr;
  try {
    runner = &runners.for_language(m.metadata.language);
  } catch (const std::out_of_range& e) {
    add(e.what());
    return rep;
  }

  if (dynamic_type(m.exercise_type)) {
    assembly::ReconstructedProgram sol{m.tests.solution, {}};
    auto v = judge::run_dynamic(sol, m.tests, *runner);
    if (v.outcome == judge::Outcome::CompileError) {
      add("solution does not compile: " + v.diagnostic->render());
    } else {
      for (const auto& t : v.per_test)
        if (!t.pass) add("solution fails test " + t.name);
      std::vector<KeywordSpec> specs;
      auto st = judge::run_static(m.tests.solution, m.tools, specs, std::nullopt);
      for (const auto& s : st.violations) add("solution violates static check: " + s);
    }

    if (m.exercise_type == ExerciseType::Baseline) {
      auto bv = judge::run_dynamic({*m.tests.baseline, {}}, m.tests, *runner);
      if (bv.outcome != judge::Outcome::CompileError && bv.pass_fraction >= 1.0)
        add("baseline already passes all tests");
    }
    if (m.exercise_type == ExerciseType::BugFix) {
      auto bv = judge::run_dynamic({*in.skeleton, {}}, m.tests, *runner);
      if (bv.outcome == judge::Outcome::Accepted) add("instructions.skeleton already passes all tests");
    }
  }

  // Author keys must reconstruct to an accepted submission.
  const auto payload = assembly::author_payload(m);
  const auto* code = std::get_if<assembly::CodePayload>(&payload);
  if (!code || m.exercise_type == ExerciseType::Baseline) {
    judge::BaselineCache cache;
    auto av = judge::judge_submission(m, payload, runners, cache);
    if (av.outcome != judge::Outcome::Accepted)
      add("author key payload judged " + std::string(judge::outcome_name(av.outcome)));
  }
  return rep;
}

}  // namespace exforge::manifest
