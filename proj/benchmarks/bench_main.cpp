#include <benchmark/benchmark.h>

#include <random>

#include "meb/environments.hpp"
#include "meb/estimators.hpp"
#include "meb/harness.hpp"
#include "meb/policies.hpp"
#include "meb/rng.hpp"

namespace {

meb::ObservedRound random_round(std::mt19937_64& rng, int d, std::int64_t t) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd x(d);
  for (int i = 0; i < d; ++i) x(i) = normal(rng);
  return {x, static_cast<int>(rng() % 2), normal(rng), 0.5,
          0.05 * Eigen::MatrixXd::Identity(d, d), t};
}

void BM_AbsorbRound(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  const auto ref = meb::ReferencePolicySchedule::uniform(2);
  meb::SufficientStats stats(d, 2);
  std::int64_t t = 0;
  for (auto _ : state) {
    stats.absorb(random_round(rng, d, ++t), ref);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_AbsorbRound)->Arg(5)->Arg(10)->Arg(20);

void BM_WeightedEstimate(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  std::mt19937_64 rng(2);
  const auto ref = meb::ReferencePolicySchedule::uniform(2);
  meb::SufficientStats stats(d, 2);
  for (std::int64_t t = 1; t <= 8 * d; ++t) stats.absorb(random_round(rng, d, t), ref);
  for (auto _ : state) {
    benchmark::DoNotOptimize(meb::weighted_estimate_from_stats(stats, 0).theta);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_WeightedEstimate)->Arg(5)->Arg(10)->Arg(20);

void BM_TsDecide(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  std::mt19937_64 rng(3);
  auto ts = meb::TsState::create(d, 2, 1.0, 1.0);
  for (std::int64_t t = 1; t <= 50; ++t) {
    ts = meb::ts_update(std::move(ts), random_round(rng, d, t));
  }
  const Eigen::VectorXd x = Eigen::VectorXd::Random(d);
  for (auto _ : state) {
    benchmark::DoNotOptimize(meb::ts_decide(ts, x, 0.2, rng));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_TsDecide)->Arg(5)->Arg(20);

void BM_CovarianceFeed(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(d, d);
  std::int64_t t = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(meb::estvar_feed(sigma, ++t, rng, 1.0));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_CovarianceFeed)->Arg(5)->Arg(20);

void BM_Replication(benchmark::State& state) {
  meb::ExperimentConfig cfg;
  cfg.horizon = state.range(0);
  cfg.n_exp = 1;
  cfg.schedule.warmup_len = 50;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    cfg.base_seed = ++seed;
    benchmark::DoNotOptimize(meb::run_experiment(cfg));
  }
  state.SetItemsProcessed(state.iterations() * cfg.horizon);
}
BENCHMARK(BM_Replication)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
