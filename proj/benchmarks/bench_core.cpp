#include <benchmark/benchmark.h>

#include "direnyi/entropy_oracle.hpp"
#include "direnyi/finite_size.hpp"
#include "direnyi/noisy_preprocessing.hpp"
#include "direnyi/rate_functions.hpp"

using namespace direnyi;

static void BM_RateSandwichedDown(benchmark::State& state) {
  const BellScore s{2.64, 1.0};
  const RateQuery q{EntropyFamily::sandwiched_down, 1.2, 0.0};
  for (auto _ : state) benchmark::DoNotOptimize(rate(s, q));
}
BENCHMARK(BM_RateSandwichedDown);

static void BM_NppRate(benchmark::State& state) {
  const BellScore s{2.64, 1.0};
  npp_bracket_table(EntropyFamily::sandwiched_down, 1.2, 0.05, 1.0);  // warm the cache
  for (auto _ : state)
    benchmark::DoNotOptimize(npp_rate(s, EntropyFamily::sandwiched_down, 1.2, 0.05));
}
BENCHMARK(BM_NppRate);

static void BM_BinomialTailLargeN(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(binomial_tail(4'150'000'000ULL, 10'000'000'000ULL, 0.415,
                                           TailSide::lower));
}
BENCHMARK(BM_BinomialTailLargeN);

static void BM_BuildAcceptance(benchmark::State& state) {
  const HonestModel h{};
  for (auto _ : state) benchmark::DoNotOptimize(build_acceptance(h, 1'500'000, 1e-3));
}
BENCHMARK(BM_BuildAcceptance);

static void BM_InnerMinimize(benchmark::State& state) {
  const HonestModel h{};
  const AcceptanceSet acc = build_acceptance(h, 1'500'000, 1e-3);
  const Distribution3 p = honest_distribution(h);
  for (auto _ : state) benchmark::DoNotOptimize(minimize_tilted_kl(p, acc, 0.13));
}
BENCHMARK(BM_InnerMinimize);

static void BM_SingleRoundTradeoff(benchmark::State& state) {
  const HonestModel h{};
  const AcceptanceSet acc = build_acceptance(h, 1'500'000, 1e-3);
  for (auto _ : state) benchmark::DoNotOptimize(single_round_tradeoff(1.2, h, acc));
}
BENCHMARK(BM_SingleRoundTradeoff);

static void BM_OracleSandwichedDown(benchmark::State& state) {
  const CqState cq = measure_keygen(build_attack(BellScore{2.5, 1.0}), 0.05);
  for (auto _ : state)
    benchmark::DoNotOptimize(renyi_entropy(cq, EntropyFamily::sandwiched_down, 1.7));
}
BENCHMARK(BM_OracleSandwichedDown);

BENCHMARK_MAIN();
