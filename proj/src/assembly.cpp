#include "exforge/assembly.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace exforge::assembly {

using manifest::ExerciseType;
using nlohmann::json;

namespace {

constexpr std::string_view kErrorNames[] = {
    "payload_mismatch", "missing_blank", "unknown_block", "incomplete_permutation",
    "option_out_of_range"};

bool accepts(ExerciseType t, const Payload& p, const manifest::ExerciseManifest& m) {
  const bool has_blanks = m.instructions.blanks && !m.instructions.blanks->empty();
  switch (t) {
    case ExerciseType::FromScratch:
    case ExerciseType::BugFix:
    case ExerciseType::Baseline:
      return std::holds_alternative<CodePayload>(p);
    case ExerciseType::Skeleton:
      return std::holds_alternative<CodePayload>(p) ||
             (has_blanks && std::holds_alternative<BlankAnswers>(p));
    case ExerciseType::FillBlanks:
      return std::holds_alternative<BlankAnswers>(p);
    case ExerciseType::FindBug:
      return std::holds_alternative<LineSet>(p);
    case ExerciseType::CompileErrorQuiz:
    case ExerciseType::InterpretationQuiz:
      return std::holds_alternative<Choice>(p);
    case ExerciseType::SortBlocks:
      return std::holds_alternative<BlockOrder>(p);
  }
  return false;
}

std::string payload_kind(const Payload& p) {
  static constexpr std::string_view kKinds[] = {"code", "blanks", "lines", "choice", "order"};
  return std::string(kKinds[p.index()]);
}

ReconstructedProgram splice(const manifest::ExerciseManifest& m, const BlankAnswers& a) {
  const auto& blanks = *m.instructions.blanks;
  for (const auto& [id, _] : a.answers) {
    bool known = std::any_of(blanks.begin(), blanks.end(), [&](const auto& b) { return b.id == id; });
    if (!known) throw AssemblyError(ErrorKind::PayloadMismatch, id, "unknown blank '" + id + "'");
  }
  ReconstructedProgram out;
  out.source = *m.instructions.skeleton;
  for (const auto& b : blanks) {
    auto it = a.answers.find(b.id);
    if (it == a.answers.end())
      throw AssemblyError(ErrorKind::MissingBlank, b.id, "missing answer for blank '" + b.id + "'");
    std::string text;
    if (b.closed()) {
      const auto* idx = std::get_if<std::int64_t>(&it->second);
      if (!idx)
        throw AssemblyError(ErrorKind::PayloadMismatch, b.id,
                            "blank '" + b.id + "' expects an option index");
      if (*idx < 0 || *idx >= static_cast<std::int64_t>(b.options->size()))
        throw AssemblyError(ErrorKind::OptionOutOfRange, b.id,
                            "option " + std::to_string(*idx) + " out of range for blank '" + b.id + "'");
      text = (*b.options)[static_cast<std::size_t>(*idx)];
    } else {
      const auto* s = std::get_if<std::string>(&it->second);
      if (!s)
        throw AssemblyError(ErrorKind::PayloadMismatch, b.id, "blank '" + b.id + "' expects text");
      text = *s;
    }
    const std::string ph = manifest::placeholder(b.id);
    for (std::size_t pos = out.source.find(ph); pos != std::string::npos;
         pos = out.source.find(ph, pos + text.size()))
      out.source.replace(pos, ph.size(), text);
    out.origin_map.push_back({b.id, std::move(text)});
  }
  return out;
}

ReconstructedProgram concatenate(const manifest::ExerciseManifest& m, const BlockOrder& o) {
  const auto& blocks = *m.instructions.blocks;
  std::map<std::string, const manifest::CodeBlock*> by_id;
  for (const auto& b : blocks) by_id[b.id] = &b;
  // unknown ids are reported before duplicates, whatever their position
  for (const auto& id : o.order)
    if (!by_id.count(id)) throw AssemblyError(ErrorKind::UnknownBlock, id, "unknown block '" + id + "'");
  std::set<std::string> used;
  ReconstructedProgram out;
  for (const auto& id : o.order) {
    auto it = by_id.find(id);
    if (!used.insert(id).second)
      throw AssemblyError(ErrorKind::IncompletePermutation, id, "block '" + id + "' used twice");
    if (!out.source.empty()) out.source += '\n';
    out.source += it->second->code;
  }
  if (used.size() != blocks.size())
    throw AssemblyError(ErrorKind::IncompletePermutation, "",
                        "order must use each of the " + std::to_string(blocks.size()) +
                            " blocks exactly once");
  return out;
}

}  // namespace

std::string_view error_kind_name(ErrorKind k) { return kErrorNames[static_cast<std::size_t>(k)]; }

AssemblyError::AssemblyError(ErrorKind kind, std::string subject, const std::string& message)
    : std::runtime_error(message), kind_(kind), subject_(std::move(subject)) {}

Payload payload_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw PayloadFormatError("payload must be an object with a string \"kind\"");
  const std::string kind = j["kind"].get<std::string>();
  auto field = [&](const char* name) -> const json& {
    if (!j.contains(name)) throw PayloadFormatError("payload \"" + kind + "\" needs \"" + name + "\"");
    return j[name];
  };
  if (kind == "code") {
    const json& c = field("code");
    if (!c.is_string()) throw PayloadFormatError("\"code\" must be a string");
    return CodePayload{c.get<std::string>()};
  }
  if (kind == "blanks") {
    const json& a = field("answers");
    if (!a.is_object()) throw PayloadFormatError("\"answers\" must be an object");
    BlankAnswers out;
    for (auto it = a.begin(); it != a.end(); ++it) {
      if (it->is_string())
        out.answers[it.key()] = it->get<std::string>();
      else if (it->is_number_integer())
        out.answers[it.key()] = it->get<std::int64_t>();
      else
        throw PayloadFormatError("answer for '" + it.key() + "' must be text or an option index");
    }
    return out;
  }
  if (kind == "lines") {
    const json& l = field("lines");
    if (!l.is_array()) throw PayloadFormatError("\"lines\" must be an array");
    LineSet out;
    for (const auto& v : l) {
      if (!v.is_number_integer()) throw PayloadFormatError("line numbers must be integers");
      auto n = v.get<std::int64_t>();
      if (n < INT32_MIN || n > INT32_MAX) throw PayloadFormatError("line number out of range");
      out.lines.insert(static_cast<int>(n));
    }
    return out;
  }
  if (kind == "choice") {
    const json& c = field("choice");
    if (!c.is_number_integer()) throw PayloadFormatError("\"choice\" must be an integer");
    return Choice{c.get<std::int64_t>()};
  }
  if (kind == "order") {
    const json& o = field("order");
    if (!o.is_array()) throw PayloadFormatError("\"order\" must be an array");
    BlockOrder out;
    for (const auto& v : o) {
      if (!v.is_string()) throw PayloadFormatError("block ids must be strings");
      out.order.push_back(v.get<std::string>());
    }
    return out;
  }
  throw PayloadFormatError("unknown payload kind '" + kind + "'");
}

json payload_to_json(const Payload& p) {
  json j = {{"kind", payload_kind(p)}};
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, CodePayload>) {
          j["code"] = v.code;
        } else if constexpr (std::is_same_v<T, BlankAnswers>) {
          json a = json::object();
          for (const auto& [id, key] : v.answers)
            std::visit([&](const auto& k) { a[id] = k; }, key);
          j["answers"] = std::move(a);
        } else if constexpr (std::is_same_v<T, LineSet>) {
          j["lines"] = v.lines;
        } else if constexpr (std::is_same_v<T, Choice>) {
          j["choice"] = v.index;
        } else {
          j["order"] = v.order;
        }
      },
      p);
  return j;
}

Reconstruction reconstruct(const manifest::ExerciseManifest& m, const Payload& p) {
  if (!accepts(m.exercise_type, p, m))
    throw AssemblyError(ErrorKind::PayloadMismatch, payload_kind(p),
                        "payload kind '" + payload_kind(p) + "' does not match exercise type '" +
                            std::string(manifest::type_tag(m.exercise_type)) + "'");
  if (const auto* c = std::get_if<CodePayload>(&p)) return ReconstructedProgram{c->code, {}};
  if (const auto* a = std::get_if<BlankAnswers>(&p)) return splice(m, *a);
  if (const auto* o = std::get_if<BlockOrder>(&p)) return concatenate(m, *o);
  if (const auto* l = std::get_if<LineSet>(&p)) return DirectAnswer{*l};
  return DirectAnswer{std::get<Choice>(p)};
}

Payload author_payload(const manifest::ExerciseManifest& m) {
  const auto& in = m.instructions;
  switch (m.exercise_type) {
    case ExerciseType::Skeleton:
      if (!in.blanks || in.blanks->empty()) return CodePayload{m.tests.solution};
      [[fallthrough]];
    case ExerciseType::FillBlanks: {
      BlankAnswers a;
      if (in.blanks)
        for (const auto& b : *in.blanks)
          if (b.key) a.answers[b.id] = *b.key;
      return a;
    }
    case ExerciseType::SortBlocks: {
      BlockOrder o;
      if (in.blocks)
        for (const auto& b : *in.blocks) o.order.push_back(b.id);
      return o;
    }
    case ExerciseType::FindBug: {
      LineSet l;
      if (in.answer_key && in.answer_key->lines)
        l.lines.insert(in.answer_key->lines->begin(), in.answer_key->lines->end());
      return l;
    }
    case ExerciseType::CompileErrorQuiz:
    case ExerciseType::InterpretationQuiz:
      return Choice{in.answer_key && in.answer_key->choice ? *in.answer_key->choice : -1};
    default:
      return CodePayload{m.tests.solution};
  }
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng() % i]);
  return perm;
}

StudentBundle present(const manifest::ExerciseManifest& m, std::uint64_t seed) {
  const auto& in = m.instructions;
  StudentBundle b;
  b.id = m.id;
  b.title = m.title;
  b.exercise_type = m.exercise_type;
  b.difficulty = m.metadata.difficulty;
  b.statement_md = in.statement_md;
  b.allow_local_run = m.metadata.allow_local_run;
  b.base_points = m.scoring.base_points;
  if (m.metadata.reveal_bonuses) {
    const auto& md = m.scoring.modes;
    if (md.slender) b.bonus_modes.push_back("slender");
    if (md.sprinter) b.bonus_modes.push_back("sprinter");
    if (md.economic) b.bonus_modes.push_back("economic");
    if (md.sedulous) b.bonus_modes.push_back("sedulous");
    if (md.scout) b.bonus_modes.push_back("scout");
    if (md.meticulous) b.bonus_modes.push_back("meticulous");
  }

  switch (m.exercise_type) {
    case ExerciseType::Skeleton:
    case ExerciseType::FillBlanks:
    case ExerciseType::BugFix:
      b.skeleton = in.skeleton;
      break;
    case ExerciseType::Baseline:
      b.baseline = in.skeleton ? in.skeleton : m.tests.baseline;
      break;
    case ExerciseType::FindBug:
    case ExerciseType::InterpretationQuiz:
      b.snippet = in.snippet;
      b.choices = in.choices;
      break;
    case ExerciseType::CompileErrorQuiz:
      b.snippet = in.snippet;
      b.compiler_message = in.compiler_message;
      b.choices = in.choices;
      break;
    case ExerciseType::SortBlocks:
      if (in.blocks) {
        std::vector<manifest::CodeBlock> shuffled;
        for (std::size_t i : seeded_permutation(in.blocks->size(), seed))
          shuffled.push_back((*in.blocks)[i]);
        b.blocks = std::move(shuffled);
      }
      break;
    case ExerciseType::FromScratch:
      break;
  }
  if (in.blanks && (m.exercise_type == ExerciseType::Skeleton ||
                    m.exercise_type == ExerciseType::FillBlanks)) {
    std::vector<PublicBlank> pub;
    for (const auto& bl : *in.blanks) pub.push_back({bl.id, bl.options});
    b.blanks = std::move(pub);
  }
  for (const auto& t : m.tests.cases)
    if (t.visibility == manifest::Visibility::Public)
      b.public_tests.push_back({t.name, t.input, t.expected_output});
  return b;
}

json bundle_to_json(const StudentBundle& b) {
  json j = {{"id", b.id},
            {"title", b.title},
            {"exercise_type", std::string(manifest::type_tag(b.exercise_type))},
            {"difficulty", b.difficulty},
            {"statement_md", b.statement_md},
            {"allow_local_run", b.allow_local_run},
            {"base_points", b.base_points}};
  if (!b.bonus_modes.empty()) j["bonus_modes"] = b.bonus_modes;
  if (b.skeleton) j["skeleton"] = *b.skeleton;
  if (b.baseline) j["baseline"] = *b.baseline;
  if (b.blanks) {
    json arr = json::array();
    for (const auto& bl : *b.blanks) {
      json e = {{"id", bl.id}};
      if (bl.options) e["options"] = *bl.options;
      arr.push_back(std::move(e));
    }
    j["blanks"] = std::move(arr);
  }
  if (b.blocks) {
    json arr = json::array();
    for (const auto& bl : *b.blocks) arr.push_back({{"id", bl.id}, {"code", bl.code}});
    j["blocks"] = std::move(arr);
  }
  if (b.snippet) j["snippet"] = *b.snippet;
  if (b.compiler_message) j["compiler_message"] = *b.compiler_message;
  if (b.choices) j["choices"] = *b.choices;
  json tests = json::array();
  for (const auto& t : b.public_tests)
    tests.push_back({{"name", t.name}, {"input", t.input}, {"expected_output", t.expected_output}});
  j["public_tests"] = std::move(tests);
  return j;
}

}  // namespace exforge::assembly
