#include "poets/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace poets {

namespace {

constexpr double kStdEps = 1e-8;  // added to the group std before dividing

void check_coeffs_positive(const RegularizationCoeffs& coeffs) {
  if (!(coeffs.total() > 0.0))
    throw ConfigError("alpha + beta must be positive for this operation");
}

// Chain an effective logit-space gradient vector through the trunk-and-branch
// parameterization of member i. Everything upstream (score vectors, baselines,
// weights, importance ratios) collapses into `gvec` because the logit gradient
// of log pi(a) is (e_a - pi)/tau for every a: any weighted combination of
// score vectors is again a single vector in logit space.
ParamGradient chain_logit_gradient(const EnsembleParams& params, int member,
                                   const ContextFeatures& x, const Eigen::VectorXd& gvec) {
  ParamGradient grad = ParamGradient::zeros_like(params);
  grad.trunk = gvec * x.phi.transpose();
  const Eigen::VectorXd v = params.branch_a[member] * x.phi;
  grad.branch_b[member] = gvec * v.transpose();
  grad.branch_a[member] = params.branch_b[member].transpose() * gvec * x.phi.transpose();
  return grad;
}

// Soft reward vector over all actions for a full reward function.
Eigen::VectorXd soft_reward_vector(const RewardVector& r, const PolicyDistribution& pi,
                                   const PolicyDistribution& pi_ref,
                                   const RegularizationCoeffs& coeffs) {
  return r.values + coeffs.beta * pi_ref.log_probs - coeffs.total() * pi.log_probs;
}

}  // namespace

BaselineDistribution baseline_from_batch(const std::vector<int>& actions,
                                         const Eigen::VectorXd& weights, int n_actions) {
  if (static_cast<int>(actions.size()) != weights.size())
    throw ConfigError("baseline: actions and weights must have equal length");
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(n_actions);
  for (std::size_t j = 0; j < actions.size(); ++j) rho[actions[j]] += weights[j];
  const double total = rho.sum();
  if (!(total > 0.0))
    throw NumericalError("baseline: total weight must be positive");
  return BaselineDistribution{rho / total};
}

double soft_objective(const PolicyDistribution& pi, const RewardVector& r,
                      const PolicyDistribution& pi_ref, const RegularizationCoeffs& coeffs) {
  double expected = 0.0, kl = 0.0, ent = 0.0;
  for (int a = 0; a < pi.n_actions(); ++a) {
    const double p = pi.probs[a];
    if (p <= 0.0) continue;  // 0 log 0 terms vanish
    expected += p * r.values[a];
    ent -= p * pi.log_probs[a];
    if (coeffs.beta > 0.0) {
      if (pi_ref.probs[a] <= 0.0) return -std::numeric_limits<double>::infinity();
      kl += p * (pi.log_probs[a] - pi_ref.log_probs[a]);
    }
  }
  return expected - coeffs.beta * kl + coeffs.alpha * ent;
}

OptimalPolicy optimal_policy(const RewardVector& r, const PolicyDistribution& pi_ref,
                             const RegularizationCoeffs& coeffs) {
  check_coeffs_positive(coeffs);
  if (!(pi_ref.probs.sum() > 0.0))
    throw ConfigError("optimal_policy: reference has no support");
  const Eigen::VectorXd logits =
      (coeffs.beta * pi_ref.log_probs + r.values) / coeffs.total();
  OptimalPolicy result;
  result.dist = softmax_distribution(logits);
  const double lmax = logits.maxCoeff();
  result.log_z = lmax + std::log((logits.array() - lmax).exp().sum());
  return result;
}

RewardVector implicit_reward_centered(const PolicyDistribution& pi,
                                      const PolicyDistribution& pi_ref,
                                      const RegularizationCoeffs& coeffs,
                                      const BaselineDistribution& rho) {
  check_coeffs_positive(coeffs);
  Eigen::VectorXd r_pi = coeffs.total() * pi.log_probs - coeffs.beta * pi_ref.log_probs;
  r_pi.array() -= rho.rho.dot(r_pi);
  return RewardVector{std::move(r_pi), false};
}

double soft_reward(int action, const RewardVector& r, const PolicyDistribution& pi,
                   const PolicyDistribution& pi_ref, const RegularizationCoeffs& coeffs) {
  return r.values[action] + coeffs.beta * pi_ref.log_probs[action] -
         coeffs.total() * pi.log_probs[action];
}

double poets_loss(int action, const BaselineDistribution& rho, const PolicyDistribution& pi,
                  const PolicyDistribution& pi_ref, const RewardVector& r,
                  const RegularizationCoeffs& coeffs) {
  const Eigen::VectorXd soft = soft_reward_vector(r, pi, pi_ref, coeffs);
  const double centered = soft[action] - rho.rho.dot(soft);
  return centered * centered;
}

ParamGradient poets_gradient(int action, const BaselineDistribution& rho,
                             const EnsembleParams& params, int member,
                             const ContextFeatures& x, const PolicyDistribution& pi_ref,
                             const RewardVector& r, const RegularizationCoeffs& coeffs,
                             double temperature) {
  const PolicyDistribution pi = member_distribution(params, member, x, temperature);
  const Eigen::VectorXd soft = soft_reward_vector(r, pi, pi_ref, coeffs);
  const double centered = soft[action] - rho.rho.dot(soft);

  // grad log pi(a) - E_rho[grad log pi] collapses to (e_a - rho)/tau in logit
  // space; the -2(beta+alpha) factor is kept verbatim rather than folded into
  // the learning rate.
  Eigen::VectorXd gvec = -rho.rho;
  gvec[action] += 1.0;
  gvec *= -2.0 * coeffs.total() * centered / temperature;
  return chain_logit_gradient(params, member, x, gvec);
}

std::optional<ParamGradient> batch_gradient(
    const RolloutBatch& batch, const Eigen::VectorXd& weights, const EnsembleParams& params,
    int member, const ContextFeatures& x, const PolicyDistribution& pi_ref,
    const RegularizationCoeffs& coeffs, double temperature, bool standardize,
    double clip_eps, const Eigen::VectorXd* old_log_probs) {
  const int g_size = batch.size();
  if (weights.size() != g_size)
    throw ConfigError("batch_gradient: weights length must match batch size");
  if (batch.rewards.size() != g_size)
    throw ConfigError("batch_gradient: batch has no evaluated rewards");

  const double w_total = weights.sum();
  if (!(w_total > 0.0)) return std::nullopt;  // member skips this batch

  const PolicyDistribution pi = member_distribution(params, member, x, temperature);

  // Per-sample soft rewards from the observed rewards.
  Eigen::VectorXd soft(g_size);
  for (int j = 0; j < g_size; ++j) {
    const int a = batch.actions[j];
    soft[j] = batch.rewards[j] + coeffs.beta * pi_ref.log_probs[a] -
              coeffs.total() * pi.log_probs[a];
  }

  const Eigen::VectorXd wnorm = weights / w_total;
  const double baseline = wnorm.dot(soft);
  Eigen::VectorXd adv = (soft.array() - baseline).matrix();
  if (standardize) {
    const double var = wnorm.dot(adv.cwiseProduct(adv));
    adv /= std::sqrt(var) + kStdEps;
  }

  Eigen::VectorXd gvec = Eigen::VectorXd::Zero(params.n_actions());
  for (int j = 0; j < g_size; ++j) {
    const int a = batch.actions[j];
    double c = adv[j];
    if (clip_eps > 0.0 && old_log_probs != nullptr) {
      const double ratio = std::exp(pi.log_probs[a] - (*old_log_probs)[j]);
      const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
      // Pessimistic min over the two surrogates: when the clipped branch is
      // strictly smaller the sample is inactive and contributes nothing.
      if (ratio * adv[j] <= clipped * adv[j]) {
        c = ratio * adv[j];
      } else {
        c = 0.0;
      }
    }
    gvec[a] += wnorm[j] * c;
  }
  // Baseline expectation of the score vanishes under rho itself, so only the
  // played-action scores remain; mass against pi comes out through the softmax.
  Eigen::VectorXd full = gvec - gvec.sum() * pi.probs;
  full *= -2.0 * coeffs.total() / temperature;
  return chain_logit_gradient(params, member, x, full);
}

}  // namespace poets
