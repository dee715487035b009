// Parallel vs serial judging on a synthetic suite of N tests.
//
//   ./build/bench_judge --benchmark_filter=Dynamic

#include <benchmark/benchmark.h>

#include "exforge/judge.hpp"

using namespace exforge;

namespace {

const char* kSolution = "read n\ni = 1\nt = 0\nwhile i <= n {\n  t = t + i\n  print t\n  i = i + 1\n}\n";

manifest::TestSuite suite(int tests, int n) {
  manifest::TestSuite s;
  s.solution = kSolution;
  for (int k = 0; k < tests; ++k) {
    manifest::TestCase c;
    c.name = "t" + std::to_string(k);
    c.input = std::to_string(n + k);
    for (long i = 1, t = 0; i <= n + k; ++i) c.expected_output += std::to_string(t += i) + "\n";
    s.cases.push_back(std::move(c));
  }
  return s;
}

template <auto Run>
void BM_Dynamic(benchmark::State& state) {
  const auto s = suite(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const assembly::ReconstructedProgram program{kSolution, {}};
  judge::ToyRunner runner;
  for (auto _ : state) {
    auto v = Run(program, s, runner);
    if (v.outcome != judge::Outcome::Accepted) state.SkipWithError("solution rejected");
    benchmark::DoNotOptimize(v);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Batch(benchmark::State& state) {
  manifest::ExerciseManifest m;
  m.id = "bench";
  m.tests = suite(8, 500);
  std::vector<assembly::Payload> payloads(static_cast<std::size_t>(state.range(0)),
                                          assembly::CodePayload{kSolution});
  judge::RunnerSet runners;
  for (auto _ : state) {
    judge::BaselineCache cache;
    benchmark::DoNotOptimize(judge::judge_batch(m, payloads, runners, cache));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_Dynamic<judge::run_dynamic_serial>)->Name("Dynamic/serial")->Args({8, 2000})->Args({64, 2000})->Args({64, 20000})->UseRealTime();
BENCHMARK(BM_Dynamic<judge::run_dynamic>)->Name("Dynamic/parallel")->Args({8, 2000})->Args({64, 2000})->Args({64, 20000})->UseRealTime();
BENCHMARK(BM_Batch)->Arg(1)->Arg(16)->Arg(64)->UseRealTime();

BENCHMARK_MAIN();
