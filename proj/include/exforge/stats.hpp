#pragma once

// Append-only event log (JSON lines) and per-exercise statistics.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace exforge::stats {

enum class EventKind { Viewed, Submitted, Judged };

std::string_view kind_name(EventKind k);

struct Event {
  std::int64_t seq = 0;
  EventKind kind = EventKind::Viewed;
  std::string student;
  std::string exercise;
  std::int64_t ts = 0;  // ms since epoch
  // submitted: {submission, fingerprint}
  // judged:    {submission (seq of the submitted event), outcome, fingerprint,
  //             steps, peak_cells, deterministic, score (ScoreRecord|null)}
  nlohmann::json detail = nlohmann::json::object();
  bool operator==(const Event&) const = default;
};

nlohmann::json event_to_json(const Event& e);
Event event_from_json(const nlohmann::json& j);

class StorageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Single serialized writer, many readers. With a path, every append is
/// written and fsync'd before it becomes visible; without one the log lives
/// in memory.
class EventLog {
 public:
  EventLog() = default;
  /// Loads existing events; throws StorageError on malformed lines.
  explicit EventLog(std::filesystem::path path);

  /// Assigns seq = last + 1 and returns it.
  std::int64_t append(Event e);

  /// Appends all events as one unit; readers see none or all of them.
  /// Judged events may refer to the submitted event of the same batch with
  /// detail.submission = 0 ("previous event"); it is rewritten to that seq.
  std::vector<std::int64_t> append_batch(std::vector<Event> events);

  std::vector<Event> snapshot() const;
  std::int64_t last_seq() const;

 private:
  void write_locked(const std::vector<Event>& events);

  std::optional<std::filesystem::path> path_;
  mutable std::shared_mutex mu_;
  std::vector<Event> events_;
};

/// Reads a log file without taking ownership of it.
std::vector<Event> read_log(const std::filesystem::path& path);

struct Holder {
  std::string student;
  std::int64_t value = 0;
  bool operator==(const Holder&) const = default;
};

struct ExerciseStats {
  std::optional<double> avg_solution_time_s;
  std::optional<double> wrong_attempts_avg;
  std::optional<Holder> least_memory;    // value = peak_cells
  std::optional<Holder> shortest_exec;   // value = steps
  std::optional<double> avg_exec_steps;
  std::int64_t unsolved_students = 0;
  bool operator==(const ExerciseStats&) const = default;
};

ExerciseStats compute_stats(const std::vector<Event>& events, const std::string& exercise);

nlohmann::json stats_to_json(const ExerciseStats& s);

}  // namespace exforge::stats
