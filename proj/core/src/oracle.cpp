#include "poets/oracle.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "poets/common.hpp"

namespace poets {

GaussianBelief make_prior(const Eigen::MatrixXd& prior_cov, double eta) {
  if (prior_cov.rows() != prior_cov.cols())
    throw ConfigError("prior covariance must be square");
  if (!(eta > 0.0)) throw ConfigError("belief noise eta must be positive");
  GaussianBelief belief;
  belief.mean = Eigen::VectorXd::Zero(prior_cov.rows());
  belief.cov = 0.5 * (prior_cov + prior_cov.transpose());
  belief.eta = eta;
  return belief;
}

GaussianBelief posterior_update(const GaussianBelief& belief, int action, double y) {
  const int n = belief.n_actions();
  if (action < 0 || action >= n) throw std::out_of_range("belief action out of range");
  if (!(belief.eta > 0.0)) throw ConfigError("posterior update requires eta > 0");

  const Eigen::VectorXd k = belief.cov.col(action);
  const double s = belief.cov(action, action) + belief.eta * belief.eta;

  GaussianBelief out;
  out.eta = belief.eta;
  out.mean = belief.mean + k * ((y - belief.mean[action]) / s);
  Eigen::MatrixXd cov = belief.cov - (k * k.transpose()) / s;
  cov = 0.5 * (cov + cov.transpose());
  for (int i = 0; i < n; ++i) {
    if (cov(i, i) < -1e-10)
      throw NumericalError("posterior covariance lost positive semidefiniteness");
    if (cov(i, i) < 0.0) cov(i, i) = 0.0;
  }
  out.cov = std::move(cov);
  return out;
}

namespace {

// Square root of a PSD covariance: fast Cholesky when it succeeds, otherwise
// an eigendecomposition with negative eigenvalues clamped to zero (covers the
// semidefinite matrices that show up once a posterior has collapsed).
Eigen::MatrixXd covariance_sqrt(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success)
    throw NumericalError("covariance eigendecomposition failed");
  const Eigen::VectorXd clamped = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * clamped.asDiagonal();
}

}  // namespace

TsRound exact_ts_round(const GaussianBelief& belief, const PolicyDistribution& pi_ref,
                       const RegularizationCoeffs& coeffs, RngStream& rng) {
  const int n = belief.n_actions();
  const Eigen::MatrixXd root = covariance_sqrt(belief.cov);
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z[i] = rng.normal();

  TsRound round;
  round.sampled_reward = RewardVector{belief.mean + root * z, false};
  round.policy = optimal_policy(round.sampled_reward, pi_ref, coeffs).dist;
  return round;
}

double info_gain(const std::vector<double>& variances_at_played, double eta) {
  if (!(eta > 0.0)) throw ConfigError("info_gain requires eta > 0");
  const double inv_eta2 = 1.0 / (eta * eta);
  double total = 0.0;
  for (double v : variances_at_played) total += 0.5 * std::log1p(inv_eta2 * v);
  return total;
}

std::vector<double> greedy_gamma_trace(const GaussianBelief& prior, int horizon,
                                       double eta) {
  if (!(eta > 0.0)) throw ConfigError("greedy_gamma requires eta > 0");
  GaussianBelief belief = prior;
  belief.eta = eta;
  const double inv_eta2 = 1.0 / (eta * eta);
  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(horizon));
  double total = 0.0;
  for (int t = 0; t < horizon; ++t) {
    int best = 0;
    for (int a = 1; a < belief.n_actions(); ++a)
      if (belief.cov(a, a) > belief.cov(best, best)) best = a;
    total += 0.5 * std::log1p(inv_eta2 * belief.cov(best, best));
    // Only the covariance shrinks under conditioning; the fantasized value is
    // irrelevant, so observe the current mean.
    belief = posterior_update(belief, best, belief.mean[best]);
    trace.push_back(total);
  }
  return trace;
}

double greedy_gamma(const GaussianBelief& prior, int horizon, double eta) {
  if (horizon == 0) return 0.0;
  return greedy_gamma_trace(prior, horizon, eta).back();
}

double confidence_beta(int n_actions) {
  return 1.0 + std::sqrt(2.0 * std::log(2.0 * n_actions) + 2.0);
}

double noise_constant(double eta) {
  if (!(eta > 0.0)) throw ConfigError("noise_constant requires eta > 0");
  return 2.0 / std::log1p(1.0 / (eta * eta));
}

double regret_bound(int horizon, double gamma, int n_actions, double eta) {
  return confidence_beta(n_actions) * std::sqrt(noise_constant(eta)) *
         std::sqrt(static_cast<double>(horizon) * gamma);
}

double soft_regret(const PolicyDistribution& pi_t, const RewardVector& r,
                   const PolicyDistribution& pi_ref, const RegularizationCoeffs& coeffs) {
  const OptimalPolicy star = optimal_policy(r, pi_ref, coeffs);
  return soft_objective(star.dist, r, pi_ref, coeffs) -
         soft_objective(pi_t, r, pi_ref, coeffs);
}

SubgaussianCheck subgaussian_bound_check(
    const std::vector<std::pair<double, double>>& sample_pairs,
    const std::vector<double>& sigmas_at_selected, int n_actions) {
  if (sample_pairs.empty() || sample_pairs.size() != sigmas_at_selected.size())
    throw ConfigError("subgaussian check needs matched, nonempty samples");
  double abs_diff = 0.0, sigma_sq = 0.0;
  for (std::size_t i = 0; i < sample_pairs.size(); ++i) {
    abs_diff += std::abs(sample_pairs[i].first - sample_pairs[i].second);
    sigma_sq += sigmas_at_selected[i] * sigmas_at_selected[i];
  }
  const double m = static_cast<double>(sample_pairs.size());
  SubgaussianCheck check;
  check.lhs = abs_diff / m;
  check.rhs = confidence_beta(n_actions) * std::sqrt(sigma_sq / m);
  check.pass = check.lhs <= check.rhs;
  return check;
}

}  // namespace poets
