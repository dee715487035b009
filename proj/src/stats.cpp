#include "exforge/stats.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <tuple>

namespace exforge::stats {

using nlohmann::json;

namespace {

constexpr std::string_view kKindNames[] = {"viewed", "submitted", "judged"};

EventKind kind_from_name(const std::string& s) {
  for (std::size_t i = 0; i < 3; ++i)
    if (kKindNames[i] == s) return static_cast<EventKind>(i);
  throw StorageError("unknown event kind '" + s + "'");
}

bool accepted(const Event& e) {
  return e.kind == EventKind::Judged && e.detail.value("outcome", "") == "accepted";
}

using Key = std::pair<std::int64_t, std::int64_t>;  // (ts, seq)
Key key_of(const Event& e) { return {e.ts, e.seq}; }

}  // namespace

std::string_view kind_name(EventKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

json event_to_json(const Event& e) {
  return {{"seq", e.seq},          {"kind", std::string(kind_name(e.kind))},
          {"student", e.student},  {"exercise", e.exercise},
          {"ts", e.ts},            {"detail", e.detail}};
}

Event event_from_json(const json& j) {
  Event e;
  e.seq = j.at("seq").get<std::int64_t>();
  e.kind = kind_from_name(j.at("kind").get<std::string>());
  e.student = j.at("student").get<std::string>();
  e.exercise = j.at("exercise").get<std::string>();
  e.ts = j.at("ts").get<std::int64_t>();
  if (j.contains("detail")) e.detail = j.at("detail");
  return e;
}

std::vector<Event> read_log(const std::filesystem::path& path) {
  std::vector<Event> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(event_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw StorageError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (out.size() > 1 && out.back().seq <= out[out.size() - 2].seq)
      throw StorageError(path.string() + ":" + std::to_string(lineno) + ": seq not increasing");
  }
  return out;
}

EventLog::EventLog(std::filesystem::path path) : path_(std::move(path)) {
  events_ = read_log(*path_);
}

void EventLog::write_locked(const std::vector<Event>& events) {
  if (!path_) return;
  std::string data;
  for (const auto& e : events) data += event_to_json(e).dump() + "\n";
  int fd = ::open(path_->c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw StorageError("open " + path_->string() + ": " + std::strerror(errno));
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0 && errno == EINTR) continue;
    if (n < 0) {
      int err = errno;
      ::close(fd);
      throw StorageError("write " + path_->string() + ": " + std::strerror(err));
    }
    off += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    int err = errno;
    ::close(fd);
    throw StorageError("fsync " + path_->string() + ": " + std::strerror(err));
  }
  ::close(fd);
}

std::int64_t EventLog::append(Event e) { return append_batch({std::move(e)}).front(); }

std::vector<std::int64_t> EventLog::append_batch(std::vector<Event> events) {
  std::unique_lock lock(mu_);
  std::int64_t seq = events_.empty() ? 0 : events_.back().seq;
  std::vector<std::int64_t> seqs;
  for (auto& e : events) {
    e.seq = ++seq;
    if (e.kind == EventKind::Judged && e.detail.value("submission", std::int64_t{-1}) == 0)
      e.detail["submission"] = e.seq - 1;
    seqs.push_back(e.seq);
  }
  write_locked(events);
  events_.insert(events_.end(), std::make_move_iterator(events.begin()),
                 std::make_move_iterator(events.end()));
  return seqs;
}

std::vector<Event> EventLog::snapshot() const {
  std::shared_lock lock(mu_);
  return events_;
}

std::int64_t EventLog::last_seq() const {
  std::shared_lock lock(mu_);
  return events_.empty() ? 0 : events_.back().seq;
}

ExerciseStats compute_stats(const std::vector<Event>& events, const std::string& exercise) {
  struct PerStudent {
    std::optional<Key> first_view;
    std::optional<Key> first_accept;
    std::vector<Key> failures;
  };
  std::map<std::string, PerStudent> students;
  std::int64_t steps_sum = 0, accepted_count = 0;
  std::optional<std::tuple<std::int64_t, Key, std::string>> least_mem, shortest;

  for (const auto& e : events) {
    if (e.exercise != exercise) continue;
    auto& s = students[e.student];
    const Key k = key_of(e);
    if (e.kind == EventKind::Viewed) {
      if (!s.first_view || k < *s.first_view) s.first_view = k;
    } else if (e.kind == EventKind::Judged) {
      if (accepted(e)) {
        if (!s.first_accept || k < *s.first_accept) s.first_accept = k;
        const auto steps = e.detail.value("steps", std::int64_t{0});
        const auto cells = e.detail.value("peak_cells", std::int64_t{0});
        steps_sum += steps;
        ++accepted_count;
        std::tuple<std::int64_t, Key, std::string> m{cells, k, e.student};
        std::tuple<std::int64_t, Key, std::string> t{steps, k, e.student};
        if (!least_mem || m < *least_mem) least_mem = m;
        if (!shortest || t < *shortest) shortest = t;
      } else {
        s.failures.push_back(k);
      }
    }
  }

  ExerciseStats out;
  std::int64_t time_sum_ms = 0, timed = 0, wrong_sum = 0, solved = 0;
  for (const auto& [_, s] : students) {
    if (!s.first_accept) {
      ++out.unsolved_students;
      continue;
    }
    ++solved;
    for (const auto& f : s.failures)
      if (f < *s.first_accept) ++wrong_sum;
    if (s.first_view) {
      time_sum_ms += s.first_accept->first - s.first_view->first;
      ++timed;
    }
  }
  if (timed) out.avg_solution_time_s = static_cast<double>(time_sum_ms) / (1000.0 * static_cast<double>(timed));
  if (solved) out.wrong_attempts_avg = static_cast<double>(wrong_sum) / static_cast<double>(solved);
  if (accepted_count) {
    out.avg_exec_steps = static_cast<double>(steps_sum) / static_cast<double>(accepted_count);
    out.least_memory = Holder{std::get<2>(*least_mem), std::get<0>(*least_mem)};
    out.shortest_exec = Holder{std::get<2>(*shortest), std::get<0>(*shortest)};
  }
  return out;
}

json stats_to_json(const ExerciseStats& s) {
  json j = json::object();
  if (s.avg_solution_time_s) j["avg_solution_time_s"] = *s.avg_solution_time_s;
  if (s.wrong_attempts_avg) j["wrong_attempts_avg"] = *s.wrong_attempts_avg;
  if (s.least_memory) j["least_memory"] = {{"student", s.least_memory->student}, {"peak_cells", s.least_memory->value}};
  if (s.shortest_exec) j["shortest_exec"] = {{"student", s.shortest_exec->student}, {"steps", s.shortest_exec->value}};
  if (s.avg_exec_steps) j["avg_exec_steps"] = *s.avg_exec_steps;
  j["unsolved_students"] = s.unsolved_students;
  return j;
}

}  // namespace exforge::stats
