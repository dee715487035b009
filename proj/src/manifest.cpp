#include "exforge/manifest.hpp"

#include <algorithm>
#include <array>
#include <set>

#include "json.hpp"

#include "exforge/hash.hpp"

namespace exforge::manifest {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 9> kTypeTags = {
    "from_scratch", "skeleton",           "fill_blanks",
    "baseline",     "find_bug",           "bug_fix",
    "compile_error_quiz", "interpretation_quiz", "sort_blocks"};

constexpr std::string_view kOpen = "{{blank:";
constexpr std::string_view kClose = "}}";

// Typed, path-tracking view over one JSON object.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw SchemaError(path_.empty() ? "$" : path_, "expected object");
  }

  std::string sub(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  const json* find(std::string_view key) {
    seen_.insert(std::string(key));
    auto it = j_.find(std::string(key));
    if (it == j_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  const json& need(std::string_view key) {
    const json* v = find(key);
    if (!v) throw SchemaError(sub(key), "missing required field");
    return *v;
  }

  std::string str(std::string_view key) { return as_string(need(key), sub(key)); }
  std::string str_or(std::string_view key, std::string def) {
    const json* v = find(key);
    return v ? as_string(*v, sub(key)) : def;
  }
  std::optional<std::string> opt_str(std::string_view key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    return as_string(*v, sub(key));
  }
  std::int64_t integer_or(std::string_view key, std::int64_t def) {
    const json* v = find(key);
    return v ? as_int(*v, sub(key)) : def;
  }
  std::int64_t integer(std::string_view key) { return as_int(need(key), sub(key)); }
  double number_or(std::string_view key, double def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_number()) throw SchemaError(sub(key), "expected number");
    return v->get<double>();
  }
  bool boolean_or(std::string_view key, bool def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_boolean()) throw SchemaError(sub(key), "expected boolean");
    return v->get<bool>();
  }
  std::vector<std::string> strings(std::string_view key) {
    const json* v = find(key);
    std::vector<std::string> out;
    if (!v) return out;
    if (!v->is_array()) throw SchemaError(sub(key), "expected array");
    for (std::size_t i = 0; i < v->size(); ++i)
      out.push_back(as_string((*v)[i], sub(key) + "[" + std::to_string(i) + "]"));
    return out;
  }

  /// Rejects keys never looked up; catches misspelled optional fields.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw SchemaError(sub(it.key()), "unknown field");
  }

  static std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) throw SchemaError(path, "expected string");
    return v.get<std::string>();
  }
  static std::int64_t as_int(const json& v, const std::string& path) {
    if (v.is_number_unsigned()) {
      auto u = v.get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(INT64_MAX)) throw SchemaError(path, "integer out of range");
      return static_cast<std::int64_t>(u);
    }
    if (!v.is_number_integer()) throw SchemaError(path, "expected integer");
    return v.get<std::int64_t>();
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string idx_path(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

bool valid_id(std::string_view id) {
  if (id.empty()) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

Metadata parse_metadata(const json* j) {
  Metadata m;
  if (!j) return m;
  Fields f(*j, "metadata");
  m.author = f.str_or("author", "");
  m.keywords = f.strings("keywords");
  m.difficulty = static_cast<int>(f.integer_or("difficulty", 1));
  if (m.difficulty < 1 || m.difficulty > 5)
    throw SchemaError("metadata.difficulty", "must be in [1,5]");
  m.language = f.str_or("language", "toy");
  if (m.language != "toy" &&
      !(m.language.rfind("external:", 0) == 0 && m.language.size() > 9))
    throw SchemaError("metadata.language", "expected \"toy\" or \"external:<name>\"");
  m.allow_local_run = f.boolean_or("allow_local_run", true);
  m.reveal_bonuses = f.boolean_or("reveal_bonuses", false);
  f.finish();
  return m;
}

Blank parse_blank(const json& j, const std::string& path) {
  Fields f(j, path);
  Blank b;
  b.id = f.str("id");
  if (!valid_id(b.id)) throw SchemaError(f.sub("id"), "illegal blank id");
  if (f.find("options")) {
    b.options = f.strings("options");
    if (b.options->size() < 2) throw SchemaError(f.sub("options"), "closed blank needs at least 2 options");
  }
  if (const json* k = f.find("key")) {
    if (b.closed()) {
      auto idx = Fields::as_int(*k, f.sub("key"));
      if (idx < 0 || idx >= static_cast<std::int64_t>(b.options->size()))
        throw SchemaError(f.sub("key"), "option index out of range");
      b.key = idx;
    } else {
      b.key = Fields::as_string(*k, f.sub("key"));
    }
  }
  f.finish();
  return b;
}

Instructions parse_instructions(const json& j) {
  Fields f(j, "instructions");
  Instructions in;
  in.statement_md = f.str("statement_md");
  in.skeleton = f.opt_str("skeleton");
  if (const json* bl = f.find("blanks")) {
    if (!bl->is_array()) throw SchemaError("instructions.blanks", "expected array");
    in.blanks.emplace();
    std::set<std::string> ids;
    for (std::size_t i = 0; i < bl->size(); ++i) {
      auto p = idx_path("instructions.blanks", i);
      in.blanks->push_back(parse_blank((*bl)[i], p));
      if (!ids.insert(in.blanks->back().id).second) throw SchemaError(p + ".id", "duplicate blank id");
    }
  }
  if (const json* bk = f.find("blocks")) {
    if (!bk->is_array()) throw SchemaError("instructions.blocks", "expected array");
    in.blocks.emplace();
    std::set<std::string> ids;
    for (std::size_t i = 0; i < bk->size(); ++i) {
      auto p = idx_path("instructions.blocks", i);
      Fields bf((*bk)[i], p);
      CodeBlock b{bf.str("id"), bf.str("code")};
      bf.finish();
      if (b.id.empty()) throw SchemaError(p + ".id", "empty block id");
      if (!ids.insert(b.id).second) throw SchemaError(p + ".id", "duplicate block id");
      in.blocks->push_back(std::move(b));
    }
  }
  in.snippet = f.opt_str("snippet");
  in.compiler_message = f.opt_str("compiler_message");
  if (f.find("choices")) in.choices = f.strings("choices");
  if (const json* ak = f.find("answer_key")) {
    Fields af(*ak, "instructions.answer_key");
    AnswerKey key;
    if (const json* lines = af.find("lines")) {
      if (!lines->is_array()) throw SchemaError("instructions.answer_key.lines", "expected array");
      std::vector<int> ls;
      for (std::size_t i = 0; i < lines->size(); ++i) {
        auto p = idx_path("instructions.answer_key.lines", i);
        auto v = Fields::as_int((*lines)[i], p);
        if (v < 1 || v > INT32_MAX) throw SchemaError(p, "line numbers are 1-based");
        ls.push_back(static_cast<int>(v));
      }
      std::sort(ls.begin(), ls.end());
      ls.erase(std::unique(ls.begin(), ls.end()), ls.end());
      key.lines = std::move(ls);
    }
    if (af.find("choice")) {
      key.choice = af.integer("choice");
      if (*key.choice < 0) throw SchemaError("instructions.answer_key.choice", "must be non-negative");
    }
    af.finish();
    in.answer_key = std::move(key);
  }
  f.finish();

  // Placeholders and blanks must name the same ids.
  std::set<std::string> declared;
  if (in.blanks)
    for (const auto& b : *in.blanks) declared.insert(b.id);
  std::set<std::string> used;
  if (in.skeleton)
    for (auto& id : placeholder_ids(*in.skeleton)) used.insert(id);
  for (const auto& id : used)
    if (!declared.count(id))
      throw SchemaError("instructions.skeleton", "placeholder '" + id + "' has no blanks entry");
  for (const auto& id : declared)
    if (!used.count(id))
      throw SchemaError("instructions.blanks", "blank '" + id + "' has no placeholder in skeleton");
  return in;
}

TestSuite parse_tests(const json& j) {
  Fields f(j, "tests");
  TestSuite t;
  if (const json* cs = f.find("cases")) {
    if (!cs->is_array()) throw SchemaError("tests.cases", "expected array");
    for (std::size_t i = 0; i < cs->size(); ++i) {
      Fields cf((*cs)[i], idx_path("tests.cases", i));
      TestCase c;
      c.name = cf.str("name");
      if (c.name.empty()) throw SchemaError(cf.sub("name"), "empty test name");
      c.input = cf.str_or("input", "");
      c.expected_output = cf.str("expected_output");
      c.weight = cf.number_or("weight", 1.0);
      if (!(c.weight > 0)) throw SchemaError(cf.sub("weight"), "weight must be positive");
      auto vis = cf.str_or("visibility", "public");
      if (vis == "public")
        c.visibility = Visibility::Public;
      else if (vis == "hidden")
        c.visibility = Visibility::Hidden;
      else
        throw SchemaError(cf.sub("visibility"), "expected \"public\" or \"hidden\"");
      cf.finish();
      t.cases.push_back(std::move(c));
    }
  }
  t.solution = f.str_or("solution", "");
  t.baseline = f.opt_str("baseline");
  auto cmp = f.str_or("comparison", "trimmed");
  if (cmp == "trimmed")
    t.comparison = Comparison::Trimmed;
  else if (cmp == "exact")
    t.comparison = Comparison::Exact;
  else
    throw SchemaError("tests.comparison", "expected \"exact\" or \"trimmed\"");
  if (const json* lim = f.find("limits")) {
    Fields lf(*lim, "tests.limits");
    t.limits.max_steps = lf.integer_or("max_steps", t.limits.max_steps);
    t.limits.max_cells = lf.integer_or("max_cells", t.limits.max_cells);
    if (t.limits.max_steps <= 0) throw SchemaError("tests.limits.max_steps", "must be positive");
    if (t.limits.max_cells <= 0) throw SchemaError("tests.limits.max_cells", "must be positive");
    lf.finish();
  }
  f.finish();
  return t;
}

std::int64_t bonus_field(Fields& f, std::string_view key) {
  auto b = f.integer_or(key, 0);
  if (b < 0) throw SchemaError(f.sub(key), "bonus must be non-negative");
  return b;
}

ScoringConfig parse_scoring(const json* j) {
  ScoringConfig s;
  if (!j) return s;
  Fields f(*j, "scoring");
  s.base_points = f.integer_or("base_points", 100);
  if (s.base_points < 0) throw SchemaError("scoring.base_points", "must be non-negative");
  if (const json* mj = f.find("modes")) {
    Fields m(*mj, "scoring.modes");
    if (const json* v = m.find("slender")) {
      Fields c(*v, "scoring.modes.slender");
      SlenderConfig cfg{c.integer("len_ref"), c.integer("len_max"), bonus_field(c, "bonus")};
      if (cfg.len_ref < 0) throw SchemaError(c.sub("len_ref"), "must be non-negative");
      if (cfg.len_ref >= cfg.len_max) throw SchemaError(c.sub("len_max"), "len_ref must be < len_max");
      c.finish();
      s.modes.slender = cfg;
    }
    if (const json* v = m.find("sprinter")) {
      Fields c(*v, "scoring.modes.sprinter");
      SprinterConfig cfg{c.number_or("alpha", 1.0), bonus_field(c, "bonus")};
      if (!(cfg.alpha >= 1.0)) throw SchemaError(c.sub("alpha"), "alpha must be >= 1");
      c.finish();
      s.modes.sprinter = cfg;
    }
    if (const json* v = m.find("economic")) {
      Fields c(*v, "scoring.modes.economic");
      EconomicConfig cfg{c.number_or("beta", 1.0), bonus_field(c, "bonus")};
      if (!(cfg.beta >= 1.0)) throw SchemaError(c.sub("beta"), "beta must be >= 1");
      c.finish();
      s.modes.economic = cfg;
    }
    if (const json* v = m.find("sedulous")) {
      Fields c(*v, "scoring.modes.sedulous");
      SedulousConfig cfg{c.integer_or("min_attempts", 1), bonus_field(c, "bonus")};
      if (cfg.min_attempts < 1) throw SchemaError(c.sub("min_attempts"), "must be >= 1");
      c.finish();
      s.modes.sedulous = cfg;
    }
    if (const json* v = m.find("scout")) {
      Fields c(*v, "scoring.modes.scout");
      s.modes.scout = ScoutConfig{bonus_field(c, "bonus")};
      c.finish();
    }
    if (const json* v = m.find("meticulous")) {
      Fields c(*v, "scoring.modes.meticulous");
      MeticulousConfig cfg;
      const json& ks = c.need("keywords");
      if (!ks.is_array()) throw SchemaError(c.sub("keywords"), "expected array");
      for (std::size_t i = 0; i < ks.size(); ++i) {
        Fields kf(ks[i], idx_path(c.sub("keywords"), i));
        KeywordSpec spec;
        spec.token = kf.str("token");
        if (spec.token.empty()) throw SchemaError(kf.sub("token"), "empty token");
        auto cname = kf.str("construct");
        auto con = toy::construct_from_name(cname);
        if (!con) throw SchemaError(kf.sub("construct"), "unknown construct '" + cname + "'");
        spec.construct = *con;
        kf.finish();
        cfg.keywords.push_back(std::move(spec));
      }
      cfg.bonus_per = bonus_field(c, "bonus_per");
      c.finish();
      s.modes.meticulous = std::move(cfg);
    }
    m.finish();
  }
  f.finish();
  return s;
}

ToolsConfig parse_tools(const json* j) {
  ToolsConfig t;
  if (!j) return t;
  Fields f(*j, "tools");
  if (const json* sc = f.find("static_checks")) {
    if (!sc->is_array()) throw SchemaError("tools.static_checks", "expected array");
    for (std::size_t i = 0; i < sc->size(); ++i) {
      Fields cf((*sc)[i], idx_path("tools.static_checks", i));
      StaticCheck c;
      auto kind = cf.str("kind");
      if (kind == "require_token")
        c.kind = CheckKind::RequireToken;
      else if (kind == "forbid_token")
        c.kind = CheckKind::ForbidToken;
      else
        throw SchemaError(cf.sub("kind"), "expected \"require_token\" or \"forbid_token\"");
      c.token = cf.str("token");
      if (c.token.empty()) throw SchemaError(cf.sub("token"), "empty token");
      cf.finish();
      t.static_checks.push_back(std::move(c));
    }
  }
  f.find("plagiarism");  // reserved
  f.finish();
  return t;
}

json blank_key_json(const BlankKey& k) {
  return std::visit([](const auto& v) { return json(v); }, k);
}

}  // namespace

SchemaError::SchemaError(std::string path, const std::string& message)
    : std::runtime_error(path + ": " + message), path_(std::move(path)) {}

std::string_view type_tag(ExerciseType t) { return kTypeTags[static_cast<std::size_t>(t)]; }

std::optional<ExerciseType> type_from_tag(std::string_view tag) {
  for (std::size_t i = 0; i < kTypeTags.size(); ++i)
    if (kTypeTags[i] == tag) return static_cast<ExerciseType>(i);
  return std::nullopt;
}

bool is_quiz(ExerciseType t) {
  return t == ExerciseType::FindBug || t == ExerciseType::CompileErrorQuiz ||
         t == ExerciseType::InterpretationQuiz;
}

std::vector<std::string> placeholder_ids(std::string_view text) {
  std::vector<std::string> ids;
  std::size_t pos = 0;
  while ((pos = text.find(kOpen, pos)) != std::string_view::npos) {
    auto end = text.find(kClose, pos + kOpen.size());
    if (end == std::string_view::npos) break;
    auto id = text.substr(pos + kOpen.size(), end - pos - kOpen.size());
    if (!valid_id(id)) {  // not a placeholder; left as literal text
      pos += kOpen.size();
      continue;
    }
    ids.emplace_back(id);
    pos = end + kClose.size();
  }
  return ids;
}

std::string placeholder(std::string_view id) {
  return std::string(kOpen) + std::string(id) + std::string(kClose);
}

int line_count(std::string_view text) {
  if (text.empty()) return 0;
  int n = static_cast<int>(std::count(text.begin(), text.end(), '\n'));
  return text.back() == '\n' ? n : n + 1;
}

ExerciseManifest parse_manifest(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("$", std::string("invalid JSON: ") + e.what());
  }
  Fields f(j, "");
  ExerciseManifest m;
  m.id = f.str("id");
  if (!valid_id(m.id)) throw SchemaError("id", "must match [a-z0-9_-]+");
  m.title = f.str_or("title", "");
  auto tag = f.str("exercise_type");
  auto t = type_from_tag(tag);
  if (!t) throw SchemaError("exercise_type", "unknown exercise type '" + tag + "'");
  m.exercise_type = *t;
  m.metadata = parse_metadata(f.find("metadata"));
  m.instructions = parse_instructions(f.need("instructions"));
  m.tests = parse_tests(f.need("tests"));
  m.scoring = parse_scoring(f.find("scoring"));
  m.tools = parse_tools(f.find("tools"));
  f.finish();
  return m;
}

std::string serialize_manifest(const ExerciseManifest& m) {
  json j;
  j["id"] = m.id;
  j["title"] = m.title;
  j["exercise_type"] = std::string(type_tag(m.exercise_type));

  const auto& md = m.metadata;
  j["metadata"] = {{"author", md.author},
                   {"keywords", md.keywords},
                   {"difficulty", md.difficulty},
                   {"language", md.language},
                   {"allow_local_run", md.allow_local_run},
                   {"reveal_bonuses", md.reveal_bonuses}};

  const auto& in = m.instructions;
  json ij = {{"statement_md", in.statement_md}};
  if (in.skeleton) ij["skeleton"] = *in.skeleton;
  if (in.blanks) {
    json arr = json::array();
    for (const auto& b : *in.blanks) {
      json bj = {{"id", b.id}};
      if (b.options) bj["options"] = *b.options;
      if (b.key) bj["key"] = blank_key_json(*b.key);
      arr.push_back(std::move(bj));
    }
    ij["blanks"] = std::move(arr);
  }
  if (in.blocks) {
    json arr = json::array();
    for (const auto& b : *in.blocks) arr.push_back({{"id", b.id}, {"code", b.code}});
    ij["blocks"] = std::move(arr);
  }
  if (in.snippet) ij["snippet"] = *in.snippet;
  if (in.compiler_message) ij["compiler_message"] = *in.compiler_message;
  if (in.choices) ij["choices"] = *in.choices;
  if (in.answer_key) {
    json k = json::object();
    if (in.answer_key->lines) k["lines"] = *in.answer_key->lines;
    if (in.answer_key->choice) k["choice"] = *in.answer_key->choice;
    ij["answer_key"] = std::move(k);
  }
  j["instructions"] = std::move(ij);

  const auto& t = m.tests;
  json cases = json::array();
  for (const auto& c : t.cases)
    cases.push_back({{"name", c.name},
                     {"input", c.input},
                     {"expected_output", c.expected_output},
                     {"weight", c.weight},
                     {"visibility", c.visibility == Visibility::Public ? "public" : "hidden"}});
  json tj = {{"cases", std::move(cases)},
             {"solution", t.solution},
             {"comparison", t.comparison == Comparison::Exact ? "exact" : "trimmed"},
             {"limits", {{"max_steps", t.limits.max_steps}, {"max_cells", t.limits.max_cells}}}};
  if (t.baseline) tj["baseline"] = *t.baseline;
  j["tests"] = std::move(tj);

  const auto& md2 = m.scoring.modes;
  json modes = json::object();
  if (md2.slender)
    modes["slender"] = {{"len_ref", md2.slender->len_ref},
                        {"len_max", md2.slender->len_max},
                        {"bonus", md2.slender->bonus}};
  if (md2.sprinter) modes["sprinter"] = {{"alpha", md2.sprinter->alpha}, {"bonus", md2.sprinter->bonus}};
  if (md2.economic) modes["economic"] = {{"beta", md2.economic->beta}, {"bonus", md2.economic->bonus}};
  if (md2.sedulous)
    modes["sedulous"] = {{"min_attempts", md2.sedulous->min_attempts}, {"bonus", md2.sedulous->bonus}};
  if (md2.scout) modes["scout"] = {{"bonus", md2.scout->bonus}};
  if (md2.meticulous) {
    json ks = json::array();
    for (const auto& k : md2.meticulous->keywords)
      ks.push_back({{"token", k.token}, {"construct", std::string(toy::construct_name(k.construct))}});
    modes["meticulous"] = {{"keywords", std::move(ks)}, {"bonus_per", md2.meticulous->bonus_per}};
  }
  j["scoring"] = {{"base_points", m.scoring.base_points}, {"modes", std::move(modes)}};

  json checks = json::array();
  for (const auto& c : m.tools.static_checks)
    checks.push_back({{"kind", c.kind == CheckKind::RequireToken ? "require_token" : "forbid_token"},
                      {"token", c.token}});
  j["tools"] = {{"static_checks", std::move(checks)}, {"plagiarism", nullptr}};

  return j.dump(2) + "\n";
}

std::string manifest_fingerprint(const ExerciseManifest& m) {
  return sha256_hex(serialize_manifest(m));
}

}  // namespace exforge::manifest
