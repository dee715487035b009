#pragma once

// Helpers shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "exforge/assembly.hpp"
#include "exforge/manifest.hpp"
#include "json.hpp"

namespace fixtures {

namespace fs = std::filesystem;

inline fs::path root() { return EXFORGE_FIXTURES; }

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<fs::path> sorted_files(const fs::path& dir, const std::string& suffix) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
      out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<fs::path> exercise_files() { return sorted_files(root() / "exercises", ".exercise.json"); }

inline exforge::manifest::ExerciseManifest load(const std::string& id) {
  return exforge::manifest::parse_manifest(slurp(root() / "exercises" / (id + ".exercise.json")));
}

// fixtures/submissions/<exercise>/<expected outcome>__<label>.json
struct Submission {
  std::string exercise;
  std::string expected_outcome;
  std::string label;
  fs::path path;
  nlohmann::json body;
  exforge::assembly::Payload payload() const { return exforge::assembly::payload_from_json(body.at("payload")); }
};

inline std::vector<Submission> submissions() {
  std::vector<Submission> out;
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root() / "submissions"))
    if (e.is_directory()) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs)
    for (const auto& f : sorted_files(d, ".json")) {
      const auto stem = f.stem().string();
      const auto sep = stem.find("__");
      out.push_back({d.filename().string(), stem.substr(0, sep), stem.substr(sep + 2), f,
                     nlohmann::json::parse(slurp(f))});
    }
  return out;
}

inline Submission submission(const std::string& exercise, const std::string& file_stem) {
  for (auto& s : submissions())
    if (s.exercise == exercise && s.expected_outcome + "__" + s.label == file_stem) return s;
  throw std::runtime_error("no submission fixture " + exercise + "/" + file_stem);
}

// fixtures/programs/*.toy with "# steps: N", "# peak_cells: N", optional
// "# input: ..." and "# output: a b c" header lines.
struct Program {
  std::string name;
  std::string source;
  std::string input;
  std::int64_t steps = -1;
  std::int64_t peak_cells = -1;
  std::optional<std::string> output;
};

inline std::vector<Program> programs() {
  std::vector<Program> out;
  for (const auto& f : sorted_files(root() / "programs", ".toy")) {
    Program p;
    p.name = f.filename().string();
    p.source = slurp(f);
    std::istringstream lines(p.source);
    std::string line;
    auto field = [&](const std::string& key) -> std::optional<std::string> {
      const std::string prefix = "# " + key + ": ";
      if (line.rfind(prefix, 0) != 0) return std::nullopt;
      return line.substr(prefix.size());
    };
    while (std::getline(lines, line)) {
      if (auto v = field("steps")) p.steps = std::stoll(*v);
      if (auto v = field("peak_cells")) p.peak_cells = std::stoll(*v);
      if (auto v = field("input")) p.input = *v;
      if (auto v = field("output")) {
        std::istringstream words(*v);
        std::string w, joined;
        while (words >> w) joined += w + "\n";
        p.output = joined;
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

// Every string leaf of a JSON value, depth first.
inline void string_leaves(const nlohmann::json& j, std::vector<std::string>& out) {
  if (j.is_string()) out.push_back(j.get<std::string>());
  else if (j.is_structured())
    for (const auto& v : j) string_leaves(v, out);
}

// Text the author deliberately shows students: anything in the manifest
// except the solution, blank keys, answer keys and hidden tests.
inline std::vector<std::string> published_text(const exforge::manifest::ExerciseManifest& m) {
  using namespace exforge::manifest;
  std::vector<std::string> out{m.title, m.instructions.statement_md};
  const auto& in = m.instructions;
  for (const auto* s : {&in.skeleton, &in.snippet, &in.compiler_message, &m.tests.baseline})
    if (*s) out.push_back(**s);
  if (in.choices) out.insert(out.end(), in.choices->begin(), in.choices->end());
  if (in.blocks)
    for (const auto& b : *in.blocks) out.push_back(b.code);
  if (in.blanks)
    for (const auto& b : *in.blanks)
      if (b.options) out.insert(out.end(), b.options->begin(), b.options->end());
  for (const auto& c : m.tests.cases)
    if (c.visibility == Visibility::Public) {
      out.push_back(c.input);
      out.push_back(c.expected_output);
    }
  return out;
}

inline constexpr std::size_t kSecretWindow = 12;

// Windows (length 12, or the whole secret when shorter) of each secret that
// occur in `exposed` without also occurring in the author-published text.
inline std::vector<std::string> leaked(const std::vector<std::string>& secrets,
                                       const std::vector<std::string>& exposed,
                                       const std::vector<std::string>& published) {
  auto contains = [](const std::vector<std::string>& hay, const std::string& needle) {
    return std::any_of(hay.begin(), hay.end(),
                       [&](const std::string& h) { return h.find(needle) != std::string::npos; });
  };
  std::vector<std::string> out;
  for (const auto& s : secrets) {
    const std::size_t w = std::min(kSecretWindow, s.size());
    if (w == 0) continue;
    for (std::size_t i = 0; i + w <= s.size(); ++i) {
      const auto window = s.substr(i, w);
      if (contains(exposed, window) && !contains(published, window)) out.push_back(window);
    }
  }
  return out;
}

// Solution text and hidden expected outputs.
inline std::vector<std::string> secrets(const exforge::manifest::ExerciseManifest& m) {
  std::vector<std::string> out;
  if (!m.tests.solution.empty()) out.push_back(m.tests.solution);
  for (const auto& c : m.tests.cases)
    if (c.visibility == exforge::manifest::Visibility::Hidden) out.push_back(c.expected_output);
  return out;
}

}  // namespace fixtures
