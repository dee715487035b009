#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <random>
#include <thread>

#include <unistd.h>

#include "exforge/stats.hpp"
#include "stats_oracle.hpp"

using namespace exforge::stats;
using nlohmann::json;

using namespace stats_oracle;

TEST(Log, SeqsStartAtOneAndIncrease) {
  EventLog log;
  EXPECT_EQ(log.append(viewed("a", 0)), 1);
  EXPECT_EQ(log.append(viewed("b", 0)), 2);
  EXPECT_EQ(log.last_seq(), 2);
}

TEST(Log, BatchLinksJudgedToSubmitted) {
  EventLog log;
  log.append(viewed("a", 0));
  auto seqs = log.append_batch({{0, EventKind::Submitted, "a", "ex", 1, json::object()},
                                {0, EventKind::Judged, "a", "ex", 1, {{"submission", 0}, {"outcome", "accepted"}}}});
  EXPECT_EQ(seqs, (std::vector<std::int64_t>{2, 3}));
  EXPECT_EQ(log.snapshot()[2].detail["submission"], 2);
}

TEST(Log, DurableAcrossReload) {
  const auto path = std::filesystem::temp_directory_path() / ("exforge-log-" + std::to_string(::getpid()) + ".jsonl");
  std::filesystem::remove(path);
  {
    EventLog log(path);
    log.append(viewed("a", 5));
    log.append(judged("a", 9, true, 3, 4));
  }
  EventLog again(path);
  auto es = again.snapshot();
  ASSERT_EQ(es.size(), 2u);
  EXPECT_EQ(es[1].detail["steps"], 3);
  EXPECT_EQ(again.append(viewed("b", 10)), 3);
  EXPECT_EQ(read_log(path).size(), 3u);
  std::filesystem::remove(path);
}

TEST(Log, MalformedFileIsStorageError) {
  const auto path = std::filesystem::temp_directory_path() / ("exforge-bad-" + std::to_string(::getpid()) + ".jsonl");
  {
    std::ofstream out(path);
    out << event_to_json(viewed("a", 0)).dump() << "\nnot json\n";
  }
  EXPECT_THROW(read_log(path), StorageError);
  std::filesystem::remove(path);
}

TEST(Log, ReadersSeePrefixesUnderConcurrentAppends) {
  EventLog log;
  std::atomic<bool> done{false};
  std::thread writer([&] {
    for (int i = 0; i < 500; ++i)
      log.append_batch({{0, EventKind::Submitted, "a", "ex", i, json::object()},
                        {0, EventKind::Judged, "a", "ex", i, {{"submission", 0}, {"outcome", "wrong_answer"}}}});
    done = true;
  });
  while (!done) {
    auto snap = log.snapshot();
    ASSERT_EQ(snap.size() % 2, 0u);  // batches are all-or-nothing
    for (std::size_t i = 0; i < snap.size(); ++i) ASSERT_EQ(snap[i].seq, static_cast<std::int64_t>(i + 1));
  }
  writer.join();
  EXPECT_EQ(log.last_seq(), 1000);
}

TEST(Stats, WorkedExample) {
  auto es = numbered({viewed("ana", 0), judged("ana", 60'000, false), judged("ana", 120'000, true, 40, 7)});
  auto s = compute_stats(es, "ex");
  EXPECT_EQ(s.avg_solution_time_s, 120.0);
  EXPECT_EQ(s.wrong_attempts_avg, 1.0);
  EXPECT_EQ(s.least_memory, (Holder{"ana", 7}));
  EXPECT_EQ(s.shortest_exec, (Holder{"ana", 40}));
  EXPECT_EQ(s.avg_exec_steps, 40.0);
  EXPECT_EQ(s.unsolved_students, 0);
}

TEST(Stats, EmptyLogHasNoFields) {
  auto j = stats_to_json(compute_stats({}, "ex"));
  EXPECT_EQ(j, (json{{"unsolved_students", 0}}));
}

TEST(Stats, LeastMemoryPicksMinimum) {
  auto es = numbered({judged("a", 1, true, 5, 10), judged("b", 2, true, 5, 7)});
  EXPECT_EQ(compute_stats(es, "ex").least_memory, (Holder{"b", 7}));
  EXPECT_EQ(compute_stats(es, "ex").shortest_exec, (Holder{"a", 5}));  // tie: earliest
}

TEST(Stats, FirstViewCounts) {
  auto es = numbered({viewed("a", 1000), viewed("a", 5000), judged("a", 11000, true)});
  EXPECT_EQ(compute_stats(es, "ex").avg_solution_time_s, 10.0);
}

TEST(Stats, UnsolvedStudentsExcludedFromAverages) {
  auto es = numbered({viewed("a", 0), judged("a", 1000, false), judged("b", 0, true)});
  auto s = compute_stats(es, "ex");
  EXPECT_EQ(s.unsolved_students, 1);
  EXPECT_EQ(s.wrong_attempts_avg, 0.0);
  EXPECT_FALSE(s.avg_solution_time_s);  // b never viewed
}

TEST(Stats, JsonShape) {
  auto es = numbered({viewed("ana", 0), judged("ana", 120'000, true, 40, 7)});
  auto j = stats_to_json(compute_stats(es, "ex"));
  EXPECT_EQ(j["least_memory"], (json{{"student", "ana"}, {"peak_cells", 7}}));
  EXPECT_EQ(j["shortest_exec"], (json{{"student", "ana"}, {"steps", 40}}));
  EXPECT_EQ(j["avg_solution_time_s"], 120.0);
}

TEST(Stats, MatchesBruteForceOnRandomLogs) {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 1000; ++i) {
    auto es = random_log(rng);
    EXPECT_EQ(compute_stats(es, "ex"), brute_force(es, "ex")) << i;
  }
}

TEST(Stats, ReplayOrderDoesNotMatter) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 300; ++i) {
    auto es = random_log(rng);
    auto shuffled = es;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_EQ(compute_stats(es, "ex"), compute_stats(shuffled, "ex"));
  }
}

TEST(Stats, ViewEventsNeverChangeWrongAttempts) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 300; ++i) {
    auto es = random_log(rng);
    auto before = compute_stats(es, "ex").wrong_attempts_avg;
    es.push_back(viewed("s" + std::to_string(i % 8), std::uniform_int_distribution<int>(0, 6000)(rng)));
    es = numbered(std::move(es));
    EXPECT_EQ(compute_stats(es, "ex").wrong_attempts_avg, before);
  }
}

TEST(Stats, EventJsonRoundTrip) {
  auto e = judged("a", 3, true, 1, 2);
  e.seq = 7;
  EXPECT_EQ(event_from_json(event_to_json(e)), e);
}
