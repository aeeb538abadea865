#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "poets/bootstrap.hpp"
#include "poets/diagnostics.hpp"
#include "poets/envs.hpp"
#include "poets/objective.hpp"
#include "poets/policy.hpp"

namespace poets {

// Everything a run needs. Defaults follow the usual optimizer conventions
// (Adam moments 0.9/0.999, importance clip 0.2, temperature 1); the branch
// learning rate is deliberately much larger than the trunk's — the fast
// branches diversify while the slow trunk consolidates.
struct TrainerConfig {
  int n_members = 1;
  int group_size = 16;
  int buffer_capacity = 1;  // T
  RegularizationCoeffs coeffs;
  double trunk_lr = 1e-3;
  double branch_lr = 0.1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip_norm = 0.0;  // 0 disables clipping
  double clip_eps = 0.2;        // importance-ratio clip; 0 disables
  bool standardize = false;
  double temperature = 1.0;
  double lambda = 1.0;  // bootstrap interpolation
  int total_rounds = 100;
  std::uint64_t seed = 0;
  int rank = 4;
  std::string trunk_init = "zero";  // "zero" | "ramp"
  double ramp_scale = 4.0;          // slope of the ramp init, in logits

  void validate() const;  // throws ConfigError
};

// Adam moment accumulators, shaped like the parameters, plus one global step
// counter (a step is one optimizer update over the whole parameter set).
struct AdamState {
  ParamGradient m;
  ParamGradient v;
  long step = 0;
};

// Mutable state of one training run. The reference distributions are frozen at
// round 0 (every member coincides with the trunk then, so the snapshot is
// unambiguous); buffers are per context.
struct TrainerState {
  EnsembleParams params;
  std::vector<ContextFeatures> features;       // one per context (one-hot)
  std::vector<PolicyDistribution> ref_dists;   // frozen at init, one per context
  std::vector<ReplayBuffers> buffers;          // one per context
  AdamState adam;
  int round = 0;
  RngStream rng;
  double best_seen = -std::numeric_limits<double>::infinity();
  double cum_soft_regret = 0.0;
};

// Build the initial state for an environment with `n_contexts` contexts over
// `n_actions` actions. Contexts are one-hot features, so the trunk holds one
// logit column per context. trunk_init "ramp" slopes context logits downward
// in the action index (the reference policy then prefers low actions), "zero"
// leaves the trunk uniform.
TrainerState init_state(const TrainerConfig& config, int n_actions, int n_contexts);

// One round: sample a group from the ensemble mixture, evaluate it, draw
// bootstrap weights, push everything into the context's replay buffer, then
// for each stored batch accumulate every member's weighted batch gradient and
// apply one optimizer update per batch. Metrics describe the behavior policy
// at the start of the round (before this round's updates). If the environment
// throws during evaluation the state is left untouched.
MetricsRecord run_round(TrainerState& state, Environment& env,
                        const TrainerConfig& config);

// Adam update with decoupled learning rates (trunk_lr for the trunk,
// branch_lr for every branch factor) and optional global-norm clipping
// applied to the whole gradient first. Throws NumericalError on non-finite
// gradients.
void optimizer_step(TrainerState& state, const ParamGradient& grad,
                    const TrainerConfig& config);

// Full deterministic run: realize the environment from the specs, init state,
// execute total_rounds rounds cycling contexts round-robin. The environment
// realization stream is derived from both the env seed and the run seed, so
// different runs see independent draws of random environments.
std::vector<MetricsRecord> run_experiment(const TrainerConfig& config,
                                          const std::vector<BanditSpec>& env_specs);

// Checkpointing: the full mutable state round-trips through JSON so a run can
// be resumed mid-stream and continue bit-identically.
nlohmann::json checkpoint_to_json(const TrainerState& state);
TrainerState checkpoint_from_json(const nlohmann::json& j);

}  // namespace poets
