#include <benchmark/benchmark.h>

#include <random>

#include "attrib/bound_solver.hpp"
#include "attrib/moments.hpp"
#include "attrib/psd_split.hpp"

namespace {

Eigen::MatrixXd random_psd(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0, 1);
  Eigen::MatrixXd a(n, 2 * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 2 * n; ++j) a(i, j) = gauss(rng);
  return a * a.transpose() / (2 * n);
}

Eigen::VectorXd random_vec(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0, 1);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = gauss(rng);
  return v;
}

void BM_GershgorinSplit(benchmark::State& state) {
  const Eigen::MatrixXd q = random_psd(static_cast<int>(state.range(0)), 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(attrib::gershgorin_split(q).trace);
}
BENCHMARK(BM_GershgorinSplit)->Arg(50)->Arg(200)->Arg(500);

void BM_EigShiftSplit(benchmark::State& state) {
  const Eigen::MatrixXd q = random_psd(static_cast<int>(state.range(0)), 2);
  for (auto _ : state)
    benchmark::DoNotOptimize(attrib::eig_shift_split(q).trace);
}
BENCHMARK(BM_EigShiftSplit)->Arg(50)->Arg(200)->Arg(500);

void BM_SdpLiteSplit(benchmark::State& state) {
  const Eigen::MatrixXd q = random_psd(static_cast<int>(state.range(0)), 3);
  for (auto _ : state)
    benchmark::DoNotOptimize(attrib::sdp_lite_split(q).trace);
}
BENCHMARK(BM_SdpLiteSplit)->Arg(50)->Arg(200);

void BM_SolveBnb(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto p = attrib::make_bound_problem(random_vec(n, 4), random_psd(n, 5),
                                            1.96, attrib::Sense::Max);
  for (auto _ : state) benchmark::DoNotOptimize(attrib::solve_bnb(p).value);
}
BENCHMARK(BM_SolveBnb)->Arg(12)->Arg(25)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_SolveRelaxed(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto p = attrib::make_bound_problem(random_vec(n, 6), random_psd(n, 7),
                                            1.96, attrib::Sense::Max);
  for (auto _ : state)
    benchmark::DoNotOptimize(attrib::solve_relaxed(p).value);
}
BENCHMARK(BM_SolveRelaxed)->Arg(50)->Arg(200);

void BM_Tau1McMoments(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  attrib::ExperimentData d;
  d.n_units = n;
  d.outcomes = Eigen::VectorXd::Zero(n);
  d.treatment = Eigen::VectorXi::Zero(n);
  d.out_edges.resize(n);
  attrib::DesignDescriptor design;
  design.kind = attrib::DesignDescriptor::Kind::Srs;
  design.n1 = n / 2;
  const auto scheme = attrib::make_tau1_scheme();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        attrib::mc_weight_moments(scheme, d, design, 2000, 1).replications);
}
BENCHMARK(BM_Tau1McMoments)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_GroupedMoments(benchmark::State& state) {
  attrib::AggregateTable t;
  t.rows = {{"1", true, 54, 25000},
            {"1", false, 72, 13000},
            {"2", true, 42, 25000},
            {"2", false, 36, 12000}};
  const auto data = attrib::expand_aggregate(t);
  std::vector<int> group_of(data.n_units);
  for (int i = 0; i < data.n_units; ++i)
    group_of[i] = static_cast<int>(data.covariates.at("group")[i]);
  attrib::DesignDescriptor design;
  design.kind = attrib::DesignDescriptor::Kind::Srs;
  design.n1 = data.n_treated();
  const auto scheme = attrib::make_tau1_scheme();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        attrib::mc_grouped_moments(scheme, data, group_of, design,
                                   state.range(0), 1)
            .replications);
}
BENCHMARK(BM_GroupedMoments)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
