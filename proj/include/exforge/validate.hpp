#pragma once

#include <string>
#include <vector>

#include "exforge/judge.hpp"
#include "exforge/manifest.hpp"

namespace exforge::manifest {

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Type-conditional field checks, then judges the author's own solution (and
/// author-key payload) and requires Accepted.
ValidationReport validate_manifest(const ExerciseManifest& m, const judge::RunnerSet& runners);

}  // namespace exforge::manifest
