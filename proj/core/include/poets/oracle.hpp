#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "poets/objective.hpp"
#include "poets/policy.hpp"
#include "poets/rng.hpp"

namespace poets {

// Gaussian belief over the per-action reward vector: the exact posterior state
// of the reference Thompson-sampling implementation. `eta` is the observation
// noise scale assumed when conditioning.
struct GaussianBelief {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  double eta = 1.0;

  int n_actions() const { return static_cast<int>(mean.size()); }
};

// Zero-mean belief with the given prior covariance. Noiseless environments
// must pass a floored eta (conditioning needs eta > 0); by convention the
// driver uses max(env noise, 1e-3).
GaussianBelief make_prior(const Eigen::MatrixXd& prior_cov, double eta);

// Exact rank-one Gaussian conditioning on one observation y = r(a) + N(0, eta^2):
//   mean' = mean + k (y - mean_a) / s,   cov' = cov - k k^T / s,
// with k the a-th covariance column and s = cov(a,a) + eta^2. The result is
// re-symmetrized; tiny negative diagonal entries are clamped to zero and
// anything worse raises NumericalError. No diagonal variance ever increases.
GaussianBelief posterior_update(const GaussianBelief& belief, int action, double y);

// One Thompson-sampling round: draw a plausible reward vector from the belief
// (through its covariance square root), then act by the closed-form optimal
// policy for that draw.
struct TsRound {
  RewardVector sampled_reward;
  PolicyDistribution policy;
};
TsRound exact_ts_round(const GaussianBelief& belief, const PolicyDistribution& pi_ref,
                       const RegularizationCoeffs& coeffs, RngStream& rng);

// Information gained by a sequence of observations whose pre-update posterior
// variances at the played actions were `variances_at_played`:
//   1/2 * sum_t ln(1 + sigma_t^2 / eta^2).
double info_gain(const std::vector<double>& variances_at_played, double eta);

// Greedy estimate of the maximal information gain over `horizon` observations:
// repeatedly fantasize an observation at the current max-variance action and
// accumulate the gain. (The exact maximum over query sequences is
// combinatorial; greedy selection is the standard surrogate.)
double greedy_gamma(const GaussianBelief& prior, int horizon, double eta);

// Per-step cumulative trace of the greedy estimate: entry t-1 is the gain
// after t fantasized observations. greedy_gamma == trace.back().
std::vector<double> greedy_gamma_trace(const GaussianBelief& prior, int horizon,
                                       double eta);

// Constants of the cumulative-regret bound.
double confidence_beta(int n_actions);  // 1 + sqrt(2 ln(2 |A|) + 2)
double noise_constant(double eta);      // 2 / ln(1 + eta^-2)

// The bound itself: confidence_beta * sqrt(noise_constant) * sqrt(T * gamma).
double regret_bound(int horizon, double gamma, int n_actions, double eta);

// Per-round regret of a policy against the closed-form optimum for the true
// reward: max_pi J(pi, r) - J(pi_t, r). Nonnegative up to roundoff.
double soft_regret(const PolicyDistribution& pi_t, const RewardVector& r,
                   const PolicyDistribution& pi_ref, const RegularizationCoeffs& coeffs);

// Monte-Carlo check of the selection-rule bound E|r_x - r'_x| <=
// confidence_beta * sqrt(E[sigma_x^2]): r, r' are i.i.d. belief draws, x is
// chosen from r by any rule, and the caller supplies the realized pairs
// (r_x, r'_x) plus the per-sample sigma_x.
struct SubgaussianCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};
SubgaussianCheck subgaussian_bound_check(
    const std::vector<std::pair<double, double>>& sample_pairs,
    const std::vector<double>& sigmas_at_selected, int n_actions);

}  // namespace poets
