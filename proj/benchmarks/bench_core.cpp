// Microbenchmarks for the hot paths: policy evaluation, gradient assembly,
// the full training round, and posterior conditioning.

#include <benchmark/benchmark.h>

#include "poets/envs.hpp"
#include "poets/objective.hpp"
#include "poets/oracle.hpp"
#include "poets/trainer.hpp"

namespace {

using namespace poets;

ContextFeatures single_context(int dim) {
  ContextFeatures x;
  x.id = 0;
  x.phi = Eigen::VectorXd::Zero(dim);
  x.phi[0] = 1.0;
  return x;
}

void BM_member_distribution(benchmark::State& state) {
  RngStream rng(7);
  EnsembleParams params = make_ensemble(64, 4, 4, 16, rng);
  const ContextFeatures x = single_context(4);
  int i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(member_distribution(params, i, x, 1.0));
    i = (i + 1) % params.n_members();
  }
}
BENCHMARK(BM_member_distribution);

void BM_grad_log_prob(benchmark::State& state) {
  RngStream rng(7);
  EnsembleParams params = make_ensemble(64, 4, 4, 16, rng);
  const ContextFeatures x = single_context(4);
  for (auto _ : state)
    benchmark::DoNotOptimize(grad_log_prob(params, 3, x, 17, 1.0));
}
BENCHMARK(BM_grad_log_prob);

void BM_batch_gradient(benchmark::State& state) {
  RngStream rng(7);
  EnsembleParams params = make_ensemble(32, 1, 4, 16, rng);
  const ContextFeatures x = single_context(1);
  const PolicyDistribution ref = member_distribution(params, 0, x, 1.0);

  RolloutBatch batch = sample_group(params, x, 16, 1.0, rng);
  batch.rewards = Eigen::VectorXd::Zero(batch.size());
  for (int j = 0; j < batch.size(); ++j) batch.rewards[j] = rng.normal();
  const PoissonWeights w = draw_weights(rng, 16, 16, 1.0);
  const RegularizationCoeffs coeffs{0.01, 0.1};

  int i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(batch_gradient(batch, w.w.row(i), params, i, x, ref,
                                            coeffs, 1.0, true, 0.0, nullptr));
    i = (i + 1) % 16;
  }
}
BENCHMARK(BM_batch_gradient);

void BM_run_round(benchmark::State& state) {
  TrainerConfig cfg;
  cfg.n_members = 16;
  cfg.group_size = 16;
  cfg.buffer_capacity = 16;
  cfg.coeffs = {0.0, 0.01};
  cfg.standardize = true;
  cfg.total_rounds = 1;
  cfg.trunk_init = "ramp";

  BanditSpec spec;
  spec.kind = "deceptive";
  spec.n_actions = 32;

  RngStream env_rng(3);
  ContextualEnv env = contextual({spec}, env_rng);
  TrainerState st = init_state(cfg, spec.n_actions, 1);
  for (auto _ : state) benchmark::DoNotOptimize(run_round(st, env, cfg));
}
BENCHMARK(BM_run_round);

void BM_posterior_update(benchmark::State& state) {
  BanditSpec spec;
  spec.kind = "gp";
  spec.n_actions = static_cast<int>(state.range(0));
  GaussianBelief belief = make_prior(kernel_matrix(spec), 0.2);
  int a = 0;
  for (auto _ : state) {
    belief = posterior_update(belief, a, 0.3);
    a = (a + 1) % spec.n_actions;
  }
}
BENCHMARK(BM_posterior_update)->Arg(16)->Arg(64);

void BM_draw_weights(benchmark::State& state) {
  RngStream rng(11);
  for (auto _ : state) benchmark::DoNotOptimize(draw_weights(rng, 16, 16, 1.0));
}
BENCHMARK(BM_draw_weights);

}  // namespace

BENCHMARK_MAIN();
