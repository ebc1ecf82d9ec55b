#include <random>

#include <benchmark/benchmark.h>

#include <hyperddc/identify.hpp>
#include <hyperddc/simest.hpp>
#include <hyperddc/stationary.hpp>

using namespace hyperddc;

namespace {

using R = ExclusionRestriction;

const std::vector<R> kPair{R::same_period(0, 1, 1, 2), R::same_period(0, 0, 0, 1)};

MomentSystem benchmark_system() {
  const FiniteModel m = three_period_dgp();
  return build_moment_system({solve_finite(m, three_period_discount()).ccp, m.transitions()}, kPair);
}

Matrix stochastic(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Matrix q(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) q(i, j) = u(rng);
  return q.array().colwise() / q.rowwise().sum().array();
}

}  // namespace

static void BM_SolveFinite(benchmark::State& state) {
  const FiniteModel m = three_period_dgp();
  for (auto _ : state) benchmark::DoNotOptimize(solve_finite(m, three_period_discount()));
}
BENCHMARK(BM_SolveFinite);

static void BM_SolveStationary(benchmark::State& state) {
  const int J = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2, 2);
  Vector util(J);
  for (int i = 0; i < J; ++i) util(i) = u(rng);
  const StationaryModel m({stochastic(rng, J), stochastic(rng, J)}, {util}, {0.7, 0.9});
  for (auto _ : state) benchmark::DoNotOptimize(solve_stationary(m));
}
BENCHMARK(BM_SolveStationary)->Arg(4)->Arg(16)->Arg(64);

static void BM_Resultant(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  Eigen::MatrixXd a(d + 1, d + 1), b(d + 1, d + 1);
  for (int i = 0; i <= d; ++i)
    for (int j = 0; j <= d; ++j) a(i, j) = u(rng), b(i, j) = u(rng);
  const BivariatePoly pa(a, kGammaDelta), pb(b, kGammaDelta);
  for (auto _ : state) benchmark::DoNotOptimize(resultant_series(pa, pb, "gamma"));
}
BENCHMARK(BM_Resultant)->Arg(2)->Arg(4)->Arg(8);

static void BM_IdentifiedSet(benchmark::State& state) {
  const MomentSystem ms = benchmark_system();
  for (auto _ : state) benchmark::DoNotOptimize(solve_identified_set(ms, IdentifyDomain::finite()));
}
BENCHMARK(BM_IdentifiedSet);

static void BM_GridOracle(benchmark::State& state) {
  const MomentSystem ms = benchmark_system();
  for (auto _ : state) benchmark::DoNotOptimize(grid_oracle(ms, IdentifyDomain::finite(), static_cast<int>(state.range(0))));
}
BENCHMARK(BM_GridOracle)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_SimulatePanel(benchmark::State& state) {
  const FiniteModel m = three_period_dgp();
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(simulate_panel(m, three_period_discount(), n, 7));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_SimulatePanel)->Arg(100000)->Unit(benchmark::kMillisecond);

static void BM_MinimumDistance(benchmark::State& state) {
  const MomentSystem ms = benchmark_system();
  for (auto _ : state) benchmark::DoNotOptimize(minimum_distance(ms));
}
BENCHMARK(BM_MinimumDistance)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
