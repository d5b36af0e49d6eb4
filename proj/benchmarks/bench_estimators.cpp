#include <benchmark/benchmark.h>

#include "momest/momest.hpp"

using namespace momest;

namespace {

Sample nm_sample(Eigen::Index n) {
  return get_problem("normal-mean").sampler(derive_seed(1, 0), n);
}

void BM_EvalMoment(benchmark::State& state) {
  const MomentProblem& nm = get_problem("normal-mean");
  const Sample s = nm_sample(state.range(0));
  const Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, 0.9);
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval_moment(nm, theta, s));
  }
}
BENCHMARK(BM_EvalMoment)->Arg(500)->Arg(2000);

void BM_CenteredPrecision(benchmark::State& state) {
  const MomentProblem& nm = get_problem("normal-mean");
  const Sample s = nm_sample(state.range(0));
  const Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, 0.9);
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval_centered_precision(nm, theta, s));
  }
}
BENCHMARK(BM_CenteredPrecision)->Arg(2000);

void BM_InnerDualEl(benchmark::State& state) {
  const MomentProblem& nm = get_problem("normal-mean");
  const Divergence& el = get_divergence("el");
  const Sample s = nm_sample(state.range(0));
  const Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, 0.9);
  for (auto _ : state) {
    benchmark::DoNotOptimize(inner_dual(el, nm, theta, s));
  }
}
BENCHMARK(BM_InnerDualEl)->Arg(500)->Arg(2000);

void BM_TwoStep(benchmark::State& state) {
  const MomentProblem& nm = get_problem("normal-mean");
  const Sample s = nm_sample(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(gmm_two_step(nm, s));
  }
}
BENCHMARK(BM_TwoStep)->Arg(500)->Arg(2000);

void BM_Cue(benchmark::State& state) {
  const MomentProblem& nm = get_problem("normal-mean");
  const Sample s = nm_sample(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(cue(nm, s));
  }
}
BENCHMARK(BM_Cue)->Arg(500)->Arg(2000);

void BM_GelEstimate(benchmark::State& state) {
  const MomentProblem& nm = get_problem("normal-mean");
  const Divergence& el = get_divergence("el");
  const Sample s = nm_sample(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(gel_estimate(nm, s, el));
  }
}
BENCHMARK(BM_GelEstimate)->Arg(500)->Arg(2000);

void BM_EfficiencyBound(benchmark::State& state) {
  const RandomInstance inst = random_bounds_instance(5, 4, 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(efficiency_bound(inst.D, inst.V));
  }
}
BENCHMARK(BM_EfficiencyBound);

}  // namespace

BENCHMARK_MAIN();
