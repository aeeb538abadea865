#pragma once

#include <optional>

#include <Eigen/Dense>

#include "poets/policy.hpp"

namespace poets {

// Coefficients of the regularized objective: beta scales the KL penalty to the
// reference policy, alpha scales the entropy bonus. Their sum must be positive
// anywhere the closed-form optimum or an implicit reward is evaluated.
struct RegularizationCoeffs {
  double alpha = 0.0;
  double beta = 0.0;

  double total() const { return alpha + beta; }
};

// A reward function on the finite action set. `bounded` marks vectors that
// were rescaled into [-1, 1] by the environment.
struct RewardVector {
  Eigen::VectorXd values;
  bool bounded = false;
};

// Baseline distribution rho used to center implicit rewards; typically the
// weighted empirical distribution of a sampled batch.
struct BaselineDistribution {
  Eigen::VectorXd rho;
};

// Weighted empirical action distribution of a batch: rho(a) proportional to
// the total weight of the samples that played a. Total weight must be positive.
BaselineDistribution baseline_from_batch(const std::vector<int>& actions,
                                         const Eigen::VectorXd& weights, int n_actions);

// The regularized objective
//   J(pi, r) = E_pi[r] - beta * KL(pi || pi_ref) + alpha * H[pi],
// evaluated as an exact finite sum. Returns -infinity when pi places mass
// where pi_ref has none and beta > 0 (infinite KL).
double soft_objective(const PolicyDistribution& pi, const RewardVector& r,
                      const PolicyDistribution& pi_ref, const RegularizationCoeffs& coeffs);

// The closed-form maximizer of J:
//   pi*(a) proportional to pi_ref(a)^(beta/(beta+alpha)) * exp(r(a)/(beta+alpha)),
// together with the log normalizer of that expression.
struct OptimalPolicy {
  PolicyDistribution dist;
  double log_z = 0.0;
};
OptimalPolicy optimal_policy(const RewardVector& r, const PolicyDistribution& pi_ref,
                             const RegularizationCoeffs& coeffs);

// The reward function a policy implicitly encodes, centered against rho so the
// unknowable additive constant cancels:
//   r_pi(a) = (beta+alpha) log pi(a) - beta log pi_ref(a) + const,
// returned as r_pi(a) - E_{a'~rho}[r_pi(a')].
RewardVector implicit_reward_centered(const PolicyDistribution& pi,
                                      const PolicyDistribution& pi_ref,
                                      const RegularizationCoeffs& coeffs,
                                      const BaselineDistribution& rho);

// Soft reward of one action: the residual between the true reward and the
// policy's implicit reward (up to a constant),
//   r~_pi(a) = r(a) + beta log pi_ref(a) - (beta+alpha) log pi(a).
double soft_reward(int action, const RewardVector& r, const PolicyDistribution& pi,
                   const PolicyDistribution& pi_ref, const RegularizationCoeffs& coeffs);

// Squared centered soft reward: the per-action matching loss
//   L(a) = (r~_pi(a) - E_{a'~rho}[r~_pi(a')])^2.
// Zero exactly when pi already encodes r (up to the baseline constant).
double poets_loss(int action, const BaselineDistribution& rho, const PolicyDistribution& pi,
                  const PolicyDistribution& pi_ref, const RewardVector& r,
                  const RegularizationCoeffs& coeffs);

// Analytic gradient of poets_loss with respect to member `i`'s parameters
// (trunk and its own branch; other branches get exact zeros):
//   -2(beta+alpha) * centered_soft_reward(a) * (grad log pi(a) - E_rho[grad log pi]).
ParamGradient poets_gradient(int action, const BaselineDistribution& rho,
                             const EnsembleParams& params, int member,
                             const ContextFeatures& x, const PolicyDistribution& pi_ref,
                             const RewardVector& r, const RegularizationCoeffs& coeffs,
                             double temperature = 1.0);

// Weighted batch gradient over one rollout group; the group-average form of
// poets_gradient with rho the weighted empirical distribution of the batch:
//   -2(beta+alpha) * sum_j (w_j / W) * c_j * grad log pi(a_j),
// where c_j is the centered (optionally standardized) soft reward of sample j,
// multiplied by a clipped importance ratio when old log-probabilities are
// supplied and clip_eps > 0 (the pessimistic-min convention: a sample whose
// clipped surrogate is the smaller branch contributes no gradient).
//
// Returns std::nullopt when the weights are all zero: that member skips the
// batch entirely.
std::optional<ParamGradient> batch_gradient(
    const RolloutBatch& batch, const Eigen::VectorXd& weights, const EnsembleParams& params,
    int member, const ContextFeatures& x, const PolicyDistribution& pi_ref,
    const RegularizationCoeffs& coeffs, double temperature = 1.0, bool standardize = false,
    double clip_eps = 0.0, const Eigen::VectorXd* old_log_probs = nullptr);

}  // namespace poets
