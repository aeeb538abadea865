#include "poets/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace poets {

EnsembleParams make_ensemble(int n_actions, int feature_dim, int rank, int n_members,
                             RngStream& rng) {
  if (n_actions < 2) throw ConfigError("ensemble needs at least 2 actions");
  if (feature_dim < 1 || rank < 1 || n_members < 1)
    throw ConfigError("feature_dim, rank and n_members must be >= 1");

  EnsembleParams params;
  params.rank = rank;
  params.trunk = Eigen::MatrixXd::Zero(n_actions, feature_dim);
  params.branch_a.reserve(n_members);
  params.branch_b.reserve(n_members);
  // One shared random down-projection for every branch. Members start as
  // exact copies (zero B), so ensemble spread can come only from the
  // bootstrap weights during training, never from the initialization.
  const double a_std = 1.0 / std::sqrt(static_cast<double>(feature_dim));
  Eigen::MatrixXd a(rank, feature_dim);
  for (int r = 0; r < rank; ++r)
    for (int c = 0; c < feature_dim; ++c) a(r, c) = a_std * rng.normal();
  for (int i = 0; i < n_members; ++i) {
    params.branch_a.push_back(a);
    params.branch_b.push_back(Eigen::MatrixXd::Zero(n_actions, rank));
  }
  return params;
}

PolicyDistribution distribution_from_probs(const Eigen::VectorXd& probs) {
  const double total = probs.sum();
  if (!(total > 0.0) || !probs.allFinite() || probs.minCoeff() < 0.0)
    throw NumericalError("probability vector must be finite, nonnegative, with positive mass");
  PolicyDistribution dist;
  dist.probs = probs / total;
  dist.log_probs = dist.probs.unaryExpr([](double p) { return safe_log(p); });
  return dist;
}

namespace {

Eigen::VectorXd member_logits(const EnsembleParams& params, int member,
                              const ContextFeatures& x) {
  if (member < 0 || member >= params.n_members())
    throw std::out_of_range("member index out of range");
  if (x.phi.size() != params.feature_dim())
    throw ConfigError("context feature dimension does not match trunk");
  Eigen::VectorXd h = params.trunk * x.phi;
  h.noalias() += params.branch_b[member] * (params.branch_a[member] * x.phi);
  return h;
}

PolicyDistribution softmax_of(const Eigen::VectorXd& logits, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (!logits.allFinite()) throw NumericalError("non-finite policy logits");
  const Eigen::VectorXd z = logits / temperature;
  const double zmax = z.maxCoeff();
  const Eigen::VectorXd shifted = (z.array() - zmax).exp().matrix();
  const double lse = zmax + std::log(shifted.sum());
  PolicyDistribution dist;
  dist.log_probs = (z.array() - lse).matrix();
  dist.probs = dist.log_probs.array().exp().matrix();
  return dist;
}

}  // namespace

PolicyDistribution softmax_distribution(const Eigen::VectorXd& logits) {
  return softmax_of(logits, 1.0);
}

PolicyDistribution member_distribution(const EnsembleParams& params, int member,
                                       const ContextFeatures& x, double temperature) {
  return softmax_of(member_logits(params, member, x), temperature);
}

PolicyDistribution mixture_distribution(const EnsembleParams& params,
                                        const ContextFeatures& x, double temperature) {
  const int n = params.n_members();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(params.n_actions());
  for (int i = 0; i < n; ++i) mean += member_distribution(params, i, x, temperature).probs;
  mean /= static_cast<double>(n);
  PolicyDistribution dist;
  dist.probs = mean;
  dist.log_probs = mean.unaryExpr([](double p) { return safe_log(p); });
  return dist;
}

RolloutBatch sample_group(const EnsembleParams& params, const ContextFeatures& x,
                          int group_size, double temperature, RngStream& rng) {
  if (group_size < 1) throw ConfigError("group size must be >= 1");
  const int n = params.n_members();
  std::vector<PolicyDistribution> dists(n);
  for (int i = 0; i < n; ++i) dists[i] = member_distribution(params, i, x, temperature);

  RolloutBatch batch;
  batch.context_id = x.id;
  batch.actions.resize(group_size);
  batch.members.resize(group_size);
  for (int j = 0; j < group_size; ++j) {
    const int i = rng.uniform_int(n);
    batch.members[j] = i;
    batch.actions[j] = rng.categorical(dists[i].probs);
  }
  return batch;
}

ParamGradient ParamGradient::zeros_like(const EnsembleParams& params) {
  ParamGradient g;
  g.trunk = Eigen::MatrixXd::Zero(params.trunk.rows(), params.trunk.cols());
  g.branch_a.reserve(params.n_members());
  g.branch_b.reserve(params.n_members());
  for (int i = 0; i < params.n_members(); ++i) {
    g.branch_a.push_back(
        Eigen::MatrixXd::Zero(params.branch_a[i].rows(), params.branch_a[i].cols()));
    g.branch_b.push_back(
        Eigen::MatrixXd::Zero(params.branch_b[i].rows(), params.branch_b[i].cols()));
  }
  return g;
}

void ParamGradient::add_scaled(const ParamGradient& other, double factor) {
  trunk += factor * other.trunk;
  for (std::size_t i = 0; i < branch_a.size(); ++i) {
    branch_a[i] += factor * other.branch_a[i];
    branch_b[i] += factor * other.branch_b[i];
  }
}

void ParamGradient::scale(double factor) {
  trunk *= factor;
  for (std::size_t i = 0; i < branch_a.size(); ++i) {
    branch_a[i] *= factor;
    branch_b[i] *= factor;
  }
}

double ParamGradient::squared_norm() const {
  double total = trunk.squaredNorm();
  for (std::size_t i = 0; i < branch_a.size(); ++i) {
    total += branch_a[i].squaredNorm();
    total += branch_b[i].squaredNorm();
  }
  return total;
}

bool ParamGradient::all_finite() const {
  if (!trunk.allFinite()) return false;
  for (std::size_t i = 0; i < branch_a.size(); ++i)
    if (!branch_a[i].allFinite() || !branch_b[i].allFinite()) return false;
  return true;
}

ParamGradient grad_log_prob(const EnsembleParams& params, int member,
                            const ContextFeatures& x, int action, double temperature) {
  const PolicyDistribution dist = member_distribution(params, member, x, temperature);
  if (action < 0 || action >= params.n_actions())
    throw std::out_of_range("action index out of range");

  Eigen::VectorXd g = -dist.probs;
  g[action] += 1.0;
  g /= temperature;

  ParamGradient grad = ParamGradient::zeros_like(params);
  grad.trunk = g * x.phi.transpose();
  const Eigen::VectorXd v = params.branch_a[member] * x.phi;
  grad.branch_b[member] = g * v.transpose();
  grad.branch_a[member] = params.branch_b[member].transpose() * g * x.phi.transpose();
  return grad;
}

}  // namespace poets
