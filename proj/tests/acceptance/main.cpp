// Acceptance suite: ten end-to-end checks against independent references and
// directional expectations, printed one line per check. Exits nonzero if any
// check fails. Tolerances and budgets are pinned next to each check.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "poets/bootstrap.hpp"
#include "poets/diagnostics.hpp"
#include "poets/envs.hpp"
#include "poets/experiment.hpp"
#include "poets/objective.hpp"
#include "poets/oracle.hpp"
#include "poets/policy.hpp"
#include "poets/rng.hpp"
#include "poets/trainer.hpp"
#include "support/grpo_reference.hpp"
#include "support/oracles.hpp"

using namespace poets;
namespace fs = std::filesystem;

namespace {

struct CheckResult {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double n = static_cast<double>(v.size());
  return std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

// ---------------------------------------------------------------------------
// 1. Analytic per-sample gradient vs central finite differences of the loss.

CheckResult check_gradient_identity() {
  constexpr int kTrials = 100;
  constexpr double kTol = 1e-5;
  constexpr double kFdStep = 1e-5;

  RngStream rng(2026);
  double worst = 0.0;
  for (int trial = 0; trial < kTrials; ++trial) {
    const int n_actions = 5, feature_dim = 3, rank = 2, n_members = 2;
    const EnsembleParams params =
        testsupport::random_params(n_actions, feature_dim, rank, n_members, rng);
    const ContextFeatures x = testsupport::random_context(feature_dim, rng);
    const PolicyDistribution ref = testsupport::random_distribution(n_actions, rng);
    const RewardVector r{testsupport::random_rewards(n_actions, rng), false};
    RegularizationCoeffs coeffs;
    coeffs.alpha = 1.0 - rng.uniform();  // (0, 1]
    coeffs.beta = 1.0 - rng.uniform();
    const double tau = 0.5 + rng.uniform();
    const int member = trial % n_members;
    const int action = rng.uniform_int(n_actions);
    const BaselineDistribution rho{testsupport::random_distribution(n_actions, rng).probs};

    const ParamGradient analytic =
        poets_gradient(action, rho, params, member, x, ref, r, coeffs, tau);
    const auto loss_at = [&](const EnsembleParams& p) {
      const PolicyDistribution pi = member_distribution(p, member, x, tau);
      return poets_loss(action, rho, pi, ref, r, coeffs);
    };
    const ParamGradient fd = testsupport::finite_difference(loss_at, params, kFdStep);
    // Central differences carry ~1e-11 absolute roundoff, which swamps the
    // relative error on near-zero gradient entries; those fall back to an
    // absolute comparison via the floor.
    worst = std::max(worst, testsupport::max_rel_err(analytic, fd, 1e-4));
  }
  return {worst < kTol, "max_rel_err=" + num(worst) + " tol=" + num(kTol)};
}

// ---------------------------------------------------------------------------
// 2. The weighted batch gradient equals both the score-function assembly and
//    the weighted mean of per-sample gradients; and the trainer's one-member
//    no-bootstrap corner reproduces an independently coded baseline exactly.

CheckResult check_batch_equivalence() {
  constexpr int kBatches = 100;
  constexpr double kTol = 1e-12;
  constexpr int kRounds = 20;

  RngStream rng(515);
  double worst_identity = 0.0;
  for (int trial = 0; trial < kBatches; ++trial) {
    const int n_actions = 4 + rng.uniform_int(4);   // 4..7
    const int n_members = 1 + rng.uniform_int(3);   // 1..3
    const int feature_dim = 2 + rng.uniform_int(2); // 2..3
    const int group = 2 + rng.uniform_int(7);       // 2..8
    const EnsembleParams params =
        testsupport::random_params(n_actions, feature_dim, 2, n_members, rng);
    const ContextFeatures x = testsupport::random_context(feature_dim, rng);
    const PolicyDistribution ref = testsupport::random_distribution(n_actions, rng);
    RegularizationCoeffs coeffs;
    coeffs.alpha = 1.0 - rng.uniform();
    coeffs.beta = 1.0 - rng.uniform();
    const int member = rng.uniform_int(n_members);

    // Rewards are a function of the action, as produced by any environment.
    const Eigen::VectorXd reward_table = testsupport::random_rewards(n_actions, rng);
    RolloutBatch batch;
    batch.context_id = x.id;
    batch.rewards.resize(group);
    for (int j = 0; j < group; ++j) {
      batch.actions.push_back(rng.uniform_int(n_actions));
      batch.members.push_back(rng.uniform_int(n_members));
      batch.rewards[j] = reward_table[batch.actions[j]];
    }
    Eigen::VectorXd weights(group);
    for (int j = 0; j < group; ++j) weights[j] = rng.poisson_unit();
    if (weights.sum() <= 0.0) weights[0] = 1.0;

    const std::optional<ParamGradient> combined = batch_gradient(
        batch, weights, params, member, x, ref, coeffs, 1.0, false, 0.0, nullptr);
    if (!combined) return {false, "batch gradient unexpectedly empty"};

    // Weighted mean of per-sample gradients around the batch baseline.
    const BaselineDistribution rho =
        baseline_from_batch(batch.actions, weights, n_actions);
    const RewardVector r{reward_table, false};
    ParamGradient per_sample_mean = ParamGradient::zeros_like(params);
    for (int j = 0; j < group; ++j) {
      const ParamGradient g = poets_gradient(batch.actions[j], rho, params, member, x,
                                             ref, r, coeffs, 1.0);
      per_sample_mean.add_scaled(g, weights[j] / weights.sum());
    }
    // Different accumulation orders leave ~1e-15 absolute residue on entries
    // whose exact value cancels to near zero; entries of magnitude <= 1 are
    // therefore compared absolutely (floor 1.0), larger ones relatively.
    worst_identity =
        std::max(worst_identity, testsupport::max_rel_err(*combined, per_sample_mean, 1.0));

    // Score-function assembly: -2 (beta+alpha) sum_j wnorm_j c_j grad log pi.
    const PolicyDistribution pi = member_distribution(params, member, x, 1.0);
    Eigen::VectorXd soft(group);
    for (int j = 0; j < group; ++j)
      soft[j] = soft_reward(batch.actions[j], r, pi, ref, coeffs);
    const Eigen::VectorXd wnorm = weights / weights.sum();
    const double baseline = wnorm.dot(soft);
    ParamGradient assembled = ParamGradient::zeros_like(params);
    for (int j = 0; j < group; ++j) {
      const ParamGradient g = grad_log_prob(params, member, x, batch.actions[j], 1.0);
      assembled.add_scaled(g, -2.0 * coeffs.total() * wnorm[j] * (soft[j] - baseline));
    }
    worst_identity =
        std::max(worst_identity, testsupport::max_rel_err(*combined, assembled, 1.0));
  }

  // Trainer trajectory vs the from-scratch single-policy baseline.
  TrainerConfig cfg;
  cfg.n_members = 1;
  cfg.group_size = 16;
  cfg.buffer_capacity = 1;
  cfg.lambda = 0.0;
  cfg.coeffs.alpha = 0.0;
  cfg.coeffs.beta = 0.01;
  cfg.trunk_lr = 1e-3;
  cfg.branch_lr = 0.1;
  cfg.standardize = true;
  cfg.clip_eps = 0.2;
  cfg.seed = 41;
  cfg.total_rounds = kRounds;

  BanditSpec spec;
  spec.kind = "deceptive";
  spec.n_actions = 8;
  spec.noise_std = 0.0;
  RngStream env_rng(7);
  ContextualEnv env = contextual({spec}, env_rng);

  TrainerState state = init_state(cfg, spec.n_actions, 1);
  RngStream ref_rng = state.rng;  // fork after the ensemble draw

  testsupport::GrpoRefConfig rcfg;
  rcfg.group_size = cfg.group_size;
  rcfg.alpha = cfg.coeffs.alpha;
  rcfg.beta = cfg.coeffs.beta;
  rcfg.trunk_lr = cfg.trunk_lr;
  rcfg.branch_lr = cfg.branch_lr;
  rcfg.clip_eps = cfg.clip_eps;
  rcfg.standardize = cfg.standardize;
  std::vector<double> phi = {1.0};
  std::vector<double> ref_lp(state.ref_dists[0].log_probs.data(),
                             state.ref_dists[0].log_probs.data() + spec.n_actions);
  const Eigen::VectorXd& true_r = env.bandit(0).true_rewards();
  std::vector<double> rewards(true_r.data(), true_r.data() + spec.n_actions);
  testsupport::GrpoReference reference(state.params, rcfg, phi, ref_lp, rewards);

  double worst_traj = 0.0;
  for (int round = 0; round < kRounds; ++round) {
    (void)run_round(state, env, cfg);
    reference.run_round(ref_rng);
    worst_traj =
        std::max(worst_traj, testsupport::grpo_max_param_diff(reference, state.params));
  }
  const double moved = state.params.trunk.cwiseAbs().maxCoeff();

  const bool pass = worst_identity < kTol && worst_traj < kTol && moved > 1e-4;
  return {pass, "identity_err=" + num(worst_identity) + " trajectory_err=" +
                    num(worst_traj) + " tol=" + num(kTol)};
}

// ---------------------------------------------------------------------------
// 3. Policy -> implicit reward -> policy and reward -> policy -> reward are
//    identities up to the additive constant the baseline removes.

CheckResult check_duality_roundtrip() {
  constexpr int kTrials = 100;
  constexpr double kTol = 1e-8;

  RngStream rng(77);
  double worst_tv = 0.0, worst_reward = 0.0;
  for (int trial = 0; trial < kTrials; ++trial) {
    const int n_actions = 3 + rng.uniform_int(6);  // 3..8
    const PolicyDistribution ref = testsupport::random_distribution(n_actions, rng);
    RegularizationCoeffs coeffs;
    coeffs.alpha = 1.0 - rng.uniform();
    coeffs.beta = 1.0 - rng.uniform();
    const BaselineDistribution rho{testsupport::random_distribution(n_actions, rng).probs};

    // reward -> optimal policy -> implicit reward recovers the centered reward.
    const RewardVector r{testsupport::random_rewards(n_actions, rng), false};
    const OptimalPolicy opt = optimal_policy(r, ref, coeffs);
    const RewardVector back = implicit_reward_centered(opt.dist, ref, coeffs, rho);
    const Eigen::VectorXd centered =
        (r.values.array() - rho.rho.dot(r.values)).matrix();
    worst_reward =
        std::max(worst_reward, (back.values - centered).cwiseAbs().maxCoeff());

    // policy -> implicit reward -> optimal policy recovers the policy.
    const PolicyDistribution pi = testsupport::random_distribution(n_actions, rng);
    const RewardVector encoded = implicit_reward_centered(pi, ref, coeffs, rho);
    const OptimalPolicy round_trip = optimal_policy(encoded, ref, coeffs);
    worst_tv = std::max(worst_tv,
                        0.5 * (round_trip.dist.probs - pi.probs).cwiseAbs().sum());
  }
  const bool pass = worst_tv < kTol && worst_reward < kTol;
  return {pass, "tv=" + num(worst_tv) + " reward_sup=" + num(worst_reward) +
                    " tol=" + num(kTol)};
}

// ---------------------------------------------------------------------------
// 4. No sampled simplex point or projected-gradient ascent beats the
//    closed-form optimum.

CheckResult check_closed_form_optimality() {
  constexpr int kInstances = 50;
  constexpr int kSimplexDraws = 10000;
  constexpr int kRestarts = 10;
  constexpr double kMarginTol = -1e-10;

  RngStream rng(4242);
  double worst_margin = std::numeric_limits<double>::infinity();
  for (int inst = 0; inst < kInstances; ++inst) {
    const int n_actions = 6;
    const PolicyDistribution ref = testsupport::random_distribution(n_actions, rng);
    RegularizationCoeffs coeffs;
    coeffs.alpha = 1.0 - rng.uniform();
    coeffs.beta = 1.0 - rng.uniform();
    const RewardVector r{testsupport::random_rewards(n_actions, rng), false};

    const OptimalPolicy opt = optimal_policy(r, ref, coeffs);
    const double best = soft_objective(opt.dist, r, ref, coeffs);

    double challenger = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd draw(n_actions);
    for (int k = 0; k < kSimplexDraws; ++k) {
      for (int a = 0; a < n_actions; ++a)
        draw[a] = -std::log(1.0 - rng.uniform());  // flat over the simplex
      const PolicyDistribution pi = distribution_from_probs(draw);
      challenger = std::max(challenger, soft_objective(pi, r, ref, coeffs));
    }
    challenger =
        std::max(challenger, testsupport::pga_best_objective(r, ref, coeffs, kRestarts, rng));
    worst_margin = std::min(worst_margin, best - challenger);
  }
  return {worst_margin >= kMarginTol,
          "worst_margin=" + num(worst_margin) + " tol=" + num(kMarginTol)};
}

// ---------------------------------------------------------------------------
// 5. Exact posterior-sampling runs stay under the information-theoretic
//    cumulative-regret bound and grow sublinearly.

CheckResult check_ts_regret_bound() {
  constexpr int kSeeds = 25;
  constexpr int kHorizon = 200;
  constexpr double kBudgetSeconds = 120.0;
  const auto start = std::chrono::steady_clock::now();

  ExperimentManifest m;
  m.method = "exact_ts";
  m.out_dir = "unused";
  BanditSpec spec;
  spec.kind = "gp";
  spec.n_actions = 16;
  spec.kernel = "rbf";
  spec.lengthscale = 0.25;
  spec.noise_std = 0.2;
  spec.seed = 3;
  m.env_specs.push_back(spec);
  m.trainer.total_rounds = kHorizon;
  m.trainer.coeffs.alpha = 0.01;
  m.trainer.coeffs.beta = 0.1;

  std::vector<double> cum_final, cum_quarter;
  for (int s = 1; s <= kSeeds; ++s) {
    m.seeds = {static_cast<std::uint64_t>(s)};
    const std::vector<MetricsRecord> rows = run_exact_ts(m, static_cast<std::uint64_t>(s));
    cum_final.push_back(rows[kHorizon - 1].cum_soft_regret);
    cum_quarter.push_back(rows[kHorizon / 4 - 1].cum_soft_regret);
  }
  const double mean_final = mean_of(cum_final);
  const double mean_quarter = mean_of(cum_quarter);

  const double eta = 0.2;
  const GaussianBelief prior = make_prior(kernel_matrix(spec), eta);
  const double gamma = greedy_gamma(prior, kHorizon, eta);
  const double bound = regret_bound(kHorizon, gamma, spec.n_actions, eta);

  // Sublinear growth: the full-horizon total must undercut 0.6x the linear
  // extrapolation of the quarter-horizon total.
  const double sublinear_cap = 0.6 * 4.0 * mean_quarter;

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool pass =
      mean_final <= bound && mean_final <= sublinear_cap && secs < kBudgetSeconds;
  return {pass, "mean_cum_regret=" + num(mean_final) + " bound=" + num(bound) +
                    " sublinear_cap=" + num(sublinear_cap) + " time=" + num(secs) + "s"};
}

// ---------------------------------------------------------------------------
// 6-8 share one sweep on the 32-action deceptive bandit.

struct RunStats {
  std::vector<double> final_cum_regret;  // per seed
  std::vector<double> final_best_seen;   // per seed
  std::vector<double> first_hit_round;   // per seed; horizon if never reached
  std::vector<double> mean_jsd;          // per round, mean across seeds
  std::vector<std::vector<double>> jsd_at_round;  // [round][seed]
  double peak_jsd = 0.0;
  int peak_round = 0;
  double peak_jsd_stderr = 0.0;
};

struct Sweep {
  RunStats poets_replay;    // n=16, lambda=1, T=16
  RunStats poets_single;    // n=16, lambda=1, T=1
  RunStats poets_half_boot; // n=16, lambda=0.5, T=16
  RunStats poets_no_boot;   // n=16, lambda=0, T=16
  RunStats grpo_single;     // n=1, lambda=0, T=1
  RunStats grpo_replay;     // n=1, lambda=0, T=16
  double seconds = 0.0;
};

constexpr int kSweepSeeds = 25;
constexpr int kSweepRounds = 300;
constexpr double kSweepGap = 0.5;
constexpr double kSweepOptimum = 0.7 + kSweepGap;  // plateau value + gap

// Constants chosen so the deceptive dynamics are sharp on both sides. The
// initial ramp hides the last action deeply enough that a single policy
// usually commits to the plateau first (the trap), while the ensemble's
// bootstrap spread keeps sampling wide until someone finds the peak. A fast
// shared trunk is the consensus channel: every member's evidence for the peak
// accumulates there, so the whole ensemble swings over once it is found. The
// wide reward gap makes post-consensus advantages crush stray probability
// mass, which is what brings ensemble diversity back down after its peak.
RunStats run_variant(int n_members, double lambda, int capacity) {
  BanditSpec spec;
  spec.kind = "deceptive";
  spec.n_actions = 32;
  spec.noise_std = 0.0;
  spec.seed = 7;
  spec.plateau_frac = 0.97;
  spec.gap = kSweepGap;

  TrainerConfig cfg;
  cfg.n_members = n_members;
  cfg.group_size = 16;
  cfg.buffer_capacity = capacity;
  cfg.lambda = lambda;
  cfg.coeffs.alpha = 0.0;
  cfg.coeffs.beta = 0.01;
  cfg.trunk_lr = 0.1;
  cfg.branch_lr = 0.1;
  cfg.standardize = true;
  cfg.clip_eps = 0.2;
  cfg.rank = 4;
  cfg.trunk_init = "ramp";
  cfg.ramp_scale = 6.0;
  cfg.total_rounds = kSweepRounds;

  RunStats stats;
  stats.jsd_at_round.assign(kSweepRounds, std::vector<double>());
  for (int s = 1; s <= kSweepSeeds; ++s) {
    cfg.seed = static_cast<std::uint64_t>(s);
    const std::vector<MetricsRecord> rows = run_experiment(cfg, {spec});
    stats.final_cum_regret.push_back(rows.back().cum_soft_regret);
    stats.final_best_seen.push_back(rows.back().best_seen);
    double hit = kSweepRounds;
    for (int t = 0; t < kSweepRounds; ++t)
      if (rows[t].best_seen >= kSweepOptimum - 1e-9) {
        hit = t;
        break;
      }
    stats.first_hit_round.push_back(hit);
    for (int t = 0; t < kSweepRounds; ++t) stats.jsd_at_round[t].push_back(rows[t].jsd);
  }
  stats.mean_jsd.resize(kSweepRounds);
  for (int t = 0; t < kSweepRounds; ++t) {
    stats.mean_jsd[t] = mean_of(stats.jsd_at_round[t]);
    if (stats.mean_jsd[t] > stats.peak_jsd) {
      stats.peak_jsd = stats.mean_jsd[t];
      stats.peak_round = t;
    }
  }
  stats.peak_jsd_stderr = stderr_of(stats.jsd_at_round[stats.peak_round]);
  return stats;
}

const Sweep& shared_sweep() {
  static const Sweep sweep = [] {
    const auto start = std::chrono::steady_clock::now();
    Sweep s;
    s.poets_replay = run_variant(16, 1.0, 16);
    s.poets_single = run_variant(16, 1.0, 1);
    s.poets_half_boot = run_variant(16, 0.5, 16);
    s.poets_no_boot = run_variant(16, 0.0, 16);
    s.grpo_single = run_variant(1, 0.0, 1);
    s.grpo_replay = run_variant(1, 0.0, 16);
    s.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return s;
  }();
  return sweep;
}

// 6. The ensemble separates from the single-policy baseline on final regret;
//    replay accelerates the ensemble's discovery of the optimum but does not
//    help the baseline.

CheckResult check_deceptive_comparison() {
  constexpr double kBudgetSeconds = 600.0;
  const Sweep& s = shared_sweep();

  const double ens_mean = mean_of(s.poets_replay.final_cum_regret);
  const double ens_se = stderr_of(s.poets_replay.final_cum_regret);
  const double base_mean = mean_of(s.grpo_single.final_cum_regret);
  const double base_se = stderr_of(s.grpo_single.final_cum_regret);
  const bool regret_separated = ens_mean + ens_se < base_mean - base_se;

  const double hit_replay = mean_of(s.poets_replay.first_hit_round);
  const double hit_single = mean_of(s.poets_single.first_hit_round);
  const bool replay_faster = hit_replay < hit_single;

  const double base_best_replay = mean_of(s.grpo_replay.final_best_seen);
  const double base_best_single = mean_of(s.grpo_single.final_best_seen);
  const bool replay_no_help = base_best_replay <= base_best_single;

  const bool pass = regret_separated && replay_faster && replay_no_help &&
                    s.seconds < kBudgetSeconds;
  return {pass, "regret " + num(ens_mean) + "+-" + num(ens_se) + " vs " +
                    num(base_mean) + "+-" + num(base_se) + "; discovery_round " +
                    num(hit_replay) + " vs " + num(hit_single) + "; baseline_best " +
                    num(base_best_replay) + " vs " + num(base_best_single) +
                    "; time=" + num(s.seconds) + "s"};
}

// 7. Ensemble diversity starts at zero, rises substantially, then recedes as
//    the members agree on what they found.

CheckResult check_diversification() {
  constexpr double kInitTol = 1e-9;
  constexpr double kMinRise = 0.1;
  const RunStats& r = shared_sweep().poets_replay;

  const double at_start = r.mean_jsd.front();
  const double at_end = r.mean_jsd.back();
  const bool pass =
      at_start < kInitTol && r.peak_jsd - at_start >= kMinRise && at_end < r.peak_jsd;
  return {pass, "jsd start=" + num(at_start) + " peak=" + num(r.peak_jsd) + " (round " +
                    num(r.peak_round) + ") end=" + num(at_end)};
}

// 8. Peak diversity grows with the bootstrap interpolation weight.

CheckResult check_bootstrap_ablation() {
  const Sweep& s = shared_sweep();
  const RunStats& l0 = s.poets_no_boot;
  const RunStats& l5 = s.poets_half_boot;
  const RunStats& l1 = s.poets_replay;

  const bool first = l0.peak_jsd <= l5.peak_jsd + l0.peak_jsd_stderr + l5.peak_jsd_stderr;
  const bool second = l5.peak_jsd <= l1.peak_jsd + l5.peak_jsd_stderr + l1.peak_jsd_stderr;
  return {first && second, "peak_jsd " + num(l0.peak_jsd) + " (l=0) / " +
                               num(l5.peak_jsd) + " (l=0.5) / " + num(l1.peak_jsd) +
                               " (l=1)"};
}

// ---------------------------------------------------------------------------
// 9. Distributional sanity of the stochastic pieces, all at fixed seeds:
//    bootstrap weights, mixture sampling, environment realizations, and the
//    selection-rule concentration bound.

CheckResult check_statistical_suites() {
  std::ostringstream detail;
  bool pass = true;

  {  // Poisson(1) weight moments and mass at zero, 1e6 draws.
    RngStream rng(99);
    const int n = 4, group = 250000;
    const PoissonWeights weights = draw_weights(rng, n, group, 1.0);
    const double count = static_cast<double>(n) * group;
    const double mean = weights.w.sum() / count;
    const double var =
        (weights.w.array() - mean).square().sum() / (count - 1.0);
    const double p_zero = (weights.w.array() == 0.0).count() / count;
    const double mean_err = std::abs(mean - 1.0);
    const double var_err = std::abs(var - 1.0);
    const double pz_err = std::abs(p_zero - std::exp(-1.0));
    const double mean_lim = 4.0 / std::sqrt(count);
    const double var_lim = 4.0 * std::sqrt(3.0 / count);  // Var(s^2) = (mu4-1)/N
    const double pz_lim =
        4.0 * std::sqrt(std::exp(-1.0) * (1.0 - std::exp(-1.0)) / count);
    const bool ok = mean_err < mean_lim && var_err < var_lim && pz_err < pz_lim;
    pass = pass && ok;
    detail << "poisson[mean_err=" << num(mean_err) << " var_err=" << num(var_err)
           << " p0_err=" << num(pz_err) << (ok ? " ok" : " FAIL") << "]";
  }

  {  // Mixture sampling frequencies across members and actions.
    RngStream rng(123);
    const int n_actions = 6, n_members = 3;
    const EnsembleParams params = testsupport::random_params(n_actions, 2, 2, n_members, rng);
    const ContextFeatures x = testsupport::random_context(2, rng);
    const PolicyDistribution mix = mixture_distribution(params, x, 1.0);

    const int draws = 40000, group = 5;
    Eigen::VectorXd action_counts = Eigen::VectorXd::Zero(n_actions);
    Eigen::VectorXd member_counts = Eigen::VectorXd::Zero(n_members);
    for (int k = 0; k < draws; ++k) {
      const RolloutBatch batch = sample_group(params, x, group, 1.0, rng);
      for (int j = 0; j < group; ++j) {
        action_counts[batch.actions[j]] += 1.0;
        member_counts[batch.members[j]] += 1.0;
      }
    }
    const double total = static_cast<double>(draws) * group;
    bool ok = true;
    for (int a = 0; a < n_actions; ++a) {
      const double p = mix.probs[a];
      ok = ok && std::abs(action_counts[a] / total - p) <
                     4.0 * std::sqrt(p * (1.0 - p) / total);
    }
    for (int i = 0; i < n_members; ++i) {
      const double p = 1.0 / n_members;
      ok = ok && std::abs(member_counts[i] / total - p) <
                     4.0 * std::sqrt(p * (1.0 - p) / total);
    }
    pass = pass && ok;
    detail << " mixture[" << (ok ? "ok" : "FAIL") << "]";
  }

  {  // Realized reward vectors match the kernel's mean and covariance.
    BanditSpec spec;
    spec.kind = "gp";
    spec.n_actions = 8;
    spec.kernel = "rbf";
    spec.lengthscale = 0.3;
    const Eigen::MatrixXd kernel = kernel_matrix(spec);

    RngStream rng(314);
    const int trials = 20000;
    Eigen::MatrixXd sum_outer = Eigen::MatrixXd::Zero(8, 8);
    Eigen::VectorXd sum_mean = Eigen::VectorXd::Zero(8);
    for (int k = 0; k < trials; ++k) {
      const RealizedBandit bandit = realize(spec, rng);
      const Eigen::VectorXd& r = bandit.true_rewards();
      sum_outer += r * r.transpose();
      sum_mean += r;
    }
    const Eigen::VectorXd mean = sum_mean / trials;
    const Eigen::MatrixXd cov = sum_outer / trials - mean * mean.transpose();
    bool ok = mean.cwiseAbs().maxCoeff() < 4.0 / std::sqrt(static_cast<double>(trials));
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) {
        const double se = std::sqrt(
            (kernel(i, i) * kernel(j, j) + kernel(i, j) * kernel(i, j)) / trials);
        ok = ok && std::abs(cov(i, j) - kernel(i, j)) < 4.0 * se;
      }
    pass = pass && ok;
    detail << " gp_cov[" << (ok ? "ok" : "FAIL") << "]";
  }

  {  // Selection-rule concentration on random beliefs.
    RngStream rng(2718);
    RegularizationCoeffs coeffs;
    coeffs.alpha = 0.01;
    coeffs.beta = 0.1;
    bool ok = true;
    double worst_ratio = 0.0;
    for (int b = 0; b < 20; ++b) {
      const int n_actions = 8;
      Eigen::MatrixXd root(n_actions, n_actions);
      for (int i = 0; i < n_actions; ++i)
        for (int j = 0; j < n_actions; ++j) root(i, j) = rng.normal();
      const Eigen::MatrixXd prior_cov =
          root * root.transpose() / n_actions +
          0.1 * Eigen::MatrixXd::Identity(n_actions, n_actions);
      const double eta = 0.3 + 0.7 * rng.uniform();
      const GaussianBelief belief = make_prior(prior_cov, eta);
      const PolicyDistribution ref = distribution_from_probs(
          Eigen::VectorXd::Constant(n_actions, 1.0 / n_actions));

      std::vector<std::pair<double, double>> pairs;
      std::vector<double> sigmas;
      for (int k = 0; k < 5000; ++k) {
        const TsRound first = exact_ts_round(belief, ref, coeffs, rng);
        const TsRound second = exact_ts_round(belief, ref, coeffs, rng);
        int chosen = 0;
        first.sampled_reward.values.maxCoeff(&chosen);
        pairs.emplace_back(first.sampled_reward.values[chosen],
                           second.sampled_reward.values[chosen]);
        sigmas.push_back(std::sqrt(belief.cov(chosen, chosen)));
      }
      const SubgaussianCheck check = subgaussian_bound_check(pairs, sigmas, n_actions);
      ok = ok && check.pass;
      if (check.rhs > 0.0) worst_ratio = std::max(worst_ratio, check.lhs / check.rhs);
    }
    pass = pass && ok;
    detail << " subgaussian[worst_lhs/rhs=" << num(worst_ratio)
           << (ok ? " ok" : " FAIL") << "]";
  }

  return {pass, detail.str()};
}

// ---------------------------------------------------------------------------
// 10. Identical manifests produce byte-identical artifacts through the
//     command-line binary.

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "<missing:" + path.string() + ">";
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

CheckResult check_determinism() {
  const fs::path base = fs::temp_directory_path() / "poets_acceptance_determinism";
  fs::remove_all(base);
  fs::create_directories(base);

  const fs::path config_path = base / "config.json";
  {
    nlohmann::json config;
    config["method"] = "poets";
    config["seeds"] = {1, 2};
    config["trainer"] = {{"n_members", 4},    {"group_size", 8},
                         {"buffer_capacity", 4}, {"lambda", 1.0},
                         {"total_rounds", 25}, {"alpha", 0.05},
                         {"beta", 0.1},        {"standardize", true}};
    config["env"] = {{"kind", "deceptive"}, {"n_actions", 8}, {"seed", 3}};
    std::ofstream out(config_path, std::ios::binary);
    out << config.dump(2) << "\n";
  }

  const std::string cli = POETS_CLI_PATH;
  for (const char* rep : {"a", "b"}) {
    const std::string cmd = "\"" + cli + "\" run --config \"" + config_path.string() +
                            "\" --out \"" + (base / rep).string() +
                            "\" >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    if (status != 0) return {false, "cli exited with status " + num(status)};
  }

  bool identical = true;
  std::string compared;
  for (const char* name : {"poets/seed1.csv", "poets/seed2.csv", "summary.json"}) {
    const std::string first = slurp(base / "a" / name);
    const std::string second = slurp(base / "b" / name);
    if (first.empty() || first.front() == '<' || first != second) {
      identical = false;
      compared += std::string(" ") + name + "=differs";
    }
  }
  return {identical,
          identical ? "artifacts byte-identical across two runs" : compared};
}

}  // namespace

int main() {
  struct Check {
    const char* name;
    CheckResult (*fn)();
  };
  const std::vector<Check> checks = {
      {"gradient-identity", check_gradient_identity},
      {"batch-equivalence", check_batch_equivalence},
      {"duality-roundtrip", check_duality_roundtrip},
      {"closed-form-optimality", check_closed_form_optimality},
      {"ts-regret-bound", check_ts_regret_bound},
      {"deceptive-bandit-comparison", check_deceptive_comparison},
      {"ensemble-diversification", check_diversification},
      {"bootstrap-ablation", check_bootstrap_ablation},
      {"statistical-suites", check_statistical_suites},
      {"determinism", check_determinism},
  };

  int failures = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    CheckResult result;
    try {
      result = checks[i].fn();
    } catch (const std::exception& e) {
      result = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%2zu/10] %s  %-28s %s (%.1fs)\n", i + 1,
                result.pass ? "PASS" : "FAIL", checks[i].name, result.detail.c_str(),
                secs);
    std::fflush(stdout);
    if (!result.pass) ++failures;
  }

  if (failures == 0) {
    std::printf("all 10 checks passed\n");
  } else {
    std::printf("%d of 10 checks FAILED\n", failures);
  }
  return failures == 0 ? 0 : 1;
}
