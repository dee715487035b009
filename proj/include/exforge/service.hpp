#pragma once

// Exercise registry, submission intake and the HTTP API.
//
// Handlers are plain functions returning {status, json body} so they can be
// tested without sockets; mount() binds them to cpp-httplib routes.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>

#include "exforge/gamify.hpp"
#include "exforge/judge.hpp"
#include "exforge/manifest.hpp"
#include "exforge/stats.hpp"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace exforge::service {

struct RegistryEntry {
  manifest::ExerciseManifest manifest;
  gamify::References refs;
};

using Registry = std::map<std::string, RegistryEntry>;

class RegistryError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Solution metrics used as sprinter/economic references (toy runner only).
gamify::References reference_metrics(const manifest::ExerciseManifest& m,
                                     const judge::RunnerSet& runners);

/// Validates `m` and wraps it with its reference metrics; throws RegistryError.
RegistryEntry make_entry(manifest::ExerciseManifest m, const judge::RunnerSet& runners);

/// Loads every `*.exercise.json` in `dir`. Throws RegistryError on schema
/// errors, validation violations, or duplicate ids.
Registry load_registry(const std::filesystem::path& dir, const judge::RunnerSet& runners);

/// Seed for sort-blocks shuffling; the same student always sees the same order.
std::uint64_t presentation_seed(const std::string& student, const std::string& exercise);

struct Response {
  int status = 200;
  nlohmann::json body;
};

using Clock = std::function<std::int64_t()>;

Clock system_clock_ms();

class Service {
 public:
  struct Options {
    std::optional<std::filesystem::path> exercises_dir;  // PUT persists here
    std::string admin_token;                             // empty: PUT disabled
    Clock clock = system_clock_ms();
  };

  Service(Registry registry, std::shared_ptr<stats::EventLog> log, judge::RunnerSet runners,
          Options options);

  Response get_exercises() const;
  Response get_exercise(const std::string& id, const std::string& student);
  Response post_submission(const std::string& id, const std::string& body);
  Response get_leaderboard(const std::optional<std::string>& id) const;
  Response get_stats(const std::string& id) const;
  Response put_exercise(const std::string& id, const std::string& body,
                        const std::string& authorization);

  std::shared_ptr<const Registry> registry() const;
  const stats::EventLog& log() const { return *log_; }

 private:
  std::shared_ptr<const Registry> registry_;
  mutable std::mutex registry_mu_;
  std::shared_ptr<stats::EventLog> log_;
  judge::RunnerSet runners_;
  judge::BaselineCache baseline_cache_;
  Options options_;
  std::mutex intake_mu_;  // history read + event append per submission
};

/// Score records carried by judged events, in log order.
std::vector<gamify::ScoreRecord> score_records(const std::vector<stats::Event>& events);

/// Attempts of `student` on `exercise`, oldest first.
gamify::AttemptHistory attempt_history(const std::vector<stats::Event>& events,
                                       const std::string& student, const std::string& exercise);

void mount(httplib::Server& server, Service& service);

}  // namespace exforge::service
