#include "poets/envs.hpp"

#include <cmath>

#include <Eigen/Cholesky>

#include "poets/common.hpp"

namespace poets {

Eigen::MatrixXd grid_features(int n_actions) {
  Eigen::MatrixXd f(n_actions, 1);
  for (int a = 0; a < n_actions; ++a)
    f(a, 0) = n_actions == 1 ? 0.0 : static_cast<double>(a) / (n_actions - 1);
  return f;
}

namespace {

Eigen::MatrixXd features_of(const BanditSpec& spec) {
  if (spec.action_features.size() == 0) return grid_features(spec.n_actions);
  if (spec.action_features.rows() != spec.n_actions)
    throw ConfigError("action_features row count must equal n_actions");
  return spec.action_features;
}

}  // namespace

Eigen::MatrixXd kernel_matrix(const BanditSpec& spec) {
  const Eigen::MatrixXd f = features_of(spec);
  const int n = static_cast<int>(f.rows());
  if (spec.kernel == "linear") return f * f.transpose();
  if (spec.kernel != "rbf") throw ConfigError("unknown kernel: " + spec.kernel);
  if (!(spec.lengthscale > 0.0)) throw ConfigError("rbf lengthscale must be positive");
  Eigen::MatrixXd k(n, n);
  const double denom = 2.0 * spec.lengthscale * spec.lengthscale;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      const double d2 = (f.row(i) - f.row(j)).squaredNorm();
      k(i, j) = k(j, i) = std::exp(-d2 / denom);
    }
  return k;
}

RealizedBandit::RealizedBandit(Eigen::VectorXd rewards, double noise_std)
    : rewards_(std::move(rewards)), noise_std_(noise_std) {
  if (noise_std_ < 0.0) throw ConfigError("noise_std must be >= 0");
  if (!rewards_.allFinite()) throw NumericalError("bandit rewards must be finite");
}

double RealizedBandit::evaluate(int action, RngStream& rng) {
  if (action < 0 || action >= n_actions())
    throw std::out_of_range("bandit action out of range");
  double y = rewards_[action];
  if (noise_std_ > 0.0) y += noise_std_ * rng.normal();
  history_.emplace_back(action, y);
  return y;
}

RealizedBandit realize(const BanditSpec& spec, RngStream& rng) {
  if (spec.n_actions < 2) throw ConfigError("bandit needs at least 2 actions");
  Eigen::VectorXd r;

  if (spec.kind == "gp") {
    Eigen::MatrixXd k = kernel_matrix(spec);
    const int n = static_cast<int>(k.rows());
    const double jitter = 1e-10 * k.trace() / n;
    k.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success)
      throw NumericalError("kernel matrix is not positive definite after jitter");
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z[i] = rng.normal();
    r = llt.matrixL() * z;
  } else if (spec.kind == "linear") {
    const Eigen::MatrixXd f = features_of(spec);
    Eigen::VectorXd w(f.cols());
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = rng.normal();
    r = f * w;
  } else if (spec.kind == "deceptive") {
    // A wide plateau of decent reward over the low-index actions, a slightly
    // worse valley, and one strictly better narrow peak at the far end. A
    // policy initialized to prefer low indices sees the plateau long before
    // the peak, which is the trap this environment exists to pose.
    const int n = spec.n_actions;
    const int plateau = std::max(1, static_cast<int>(std::floor(spec.plateau_frac * n)));
    constexpr double kPlateauValue = 0.7;
    constexpr double kValleyValue = 0.4;
    r = Eigen::VectorXd::Constant(n, kValleyValue);
    r.head(plateau).setConstant(kPlateauValue);
    r[n - 1] = kPlateauValue + spec.gap;
  } else {
    throw ConfigError("unknown bandit kind: " + spec.kind);
  }

  if (spec.bounded) {
    const double m = r.cwiseAbs().maxCoeff();
    if (m > 1.0) r /= m;
  }
  return RealizedBandit(std::move(r), spec.noise_std);
}

ContextualEnv::ContextualEnv(std::vector<RealizedBandit> bandits)
    : bandits_(std::move(bandits)) {
  if (bandits_.empty()) throw ConfigError("contextual env needs at least one bandit");
}

double ContextualEnv::evaluate(int context, int action, RngStream& rng) {
  if (context < 0 || context >= n_contexts())
    throw std::out_of_range("unknown context id");
  return bandits_[static_cast<std::size_t>(context)].evaluate(action, rng);
}

const Eigen::VectorXd& ContextualEnv::true_rewards(int context) const {
  return bandit(context).true_rewards();
}

const RealizedBandit& ContextualEnv::bandit(int context) const {
  if (context < 0 || context >= n_contexts())
    throw std::out_of_range("unknown context id");
  return bandits_[static_cast<std::size_t>(context)];
}

ContextualEnv contextual(const std::vector<BanditSpec>& specs, RngStream& rng) {
  std::vector<RealizedBandit> bandits;
  bandits.reserve(specs.size());
  for (const BanditSpec& s : specs) bandits.push_back(realize(s, rng));
  return ContextualEnv(std::move(bandits));
}

}  // namespace poets
