#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "poets/rng.hpp"

namespace poets {

// Description of a synthetic finite-action bandit. `kind` selects how the
// hidden reward vector is generated:
//   gp        — one draw from a zero-mean Gaussian process over the action
//               features (rbf or linear kernel),
//   linear    — r = features * weight with a standard-normal weight vector,
//   deceptive — a fixed multimodal landscape: a wide mid-value plateau on the
//               low-index actions (where a low-logit-ramp reference policy
//               concentrates), a lower valley, and a single narrow peak at the
//               last action sitting `gap` above the plateau.
struct BanditSpec {
  std::string kind = "gp";
  int n_actions = 16;
  Eigen::MatrixXd action_features;  // n_actions x d; empty => 1-D grid on [0,1]
  std::string kernel = "rbf";       // "rbf" | "linear"
  double lengthscale = 0.25;
  double noise_std = 0.0;  // observation noise eta >= 0
  bool bounded = false;    // rescale so max |r(a)| <= 1
  std::uint64_t seed = 0;

  // deceptive-kind geometry (fraction of actions on the plateau, and how far
  // the peak rises above it)
  double plateau_frac = 0.6;
  double gap = 0.3;
};

// Evenly spaced scalar features on [0, 1]; the default action embedding.
Eigen::MatrixXd grid_features(int n_actions);

// Kernel (prior covariance) matrix over the spec's action features:
// rbf k(f,f') = exp(-|f-f'|^2 / (2 l^2)), or linear k = F F^T.
Eigen::MatrixXd kernel_matrix(const BanditSpec& spec);

// A bandit whose hidden reward vector has been sampled and frozen. Evaluation
// returns r(a) plus independent Gaussian noise of scale noise_std and appends
// to the observation history.
class RealizedBandit {
 public:
  RealizedBandit(Eigen::VectorXd rewards, double noise_std);

  double evaluate(int action, RngStream& rng);

  const Eigen::VectorXd& true_rewards() const { return rewards_; }
  int n_actions() const { return static_cast<int>(rewards_.size()); }
  double noise_std() const { return noise_std_; }
  const std::vector<std::pair<int, double>>& history() const { return history_; }

 private:
  Eigen::VectorXd rewards_;
  double noise_std_;
  std::vector<std::pair<int, double>> history_;
};

// Sample the hidden reward vector for a spec. Deterministic given the rng
// state; the deceptive kind consumes no randomness at all.
RealizedBandit realize(const BanditSpec& spec, RngStream& rng);

// What the trainer needs from an environment: noisy evaluation dispatched on a
// context id, plus the hidden reward table for regret diagnostics. Virtual so
// tests can substitute failing or instrumented environments.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual double evaluate(int context, int action, RngStream& rng) = 0;
  virtual const Eigen::VectorXd& true_rewards(int context) const = 0;
  virtual int n_contexts() const = 0;
  virtual int n_actions() const = 0;
};

// A family of independent bandits indexed by context id; evaluation dispatches
// on the context and histories stay disjoint.
class ContextualEnv final : public Environment {
 public:
  explicit ContextualEnv(std::vector<RealizedBandit> bandits);

  double evaluate(int context, int action, RngStream& rng) override;
  const Eigen::VectorXd& true_rewards(int context) const override;
  int n_contexts() const override { return static_cast<int>(bandits_.size()); }
  int n_actions() const override { return bandits_.front().n_actions(); }

  const RealizedBandit& bandit(int context) const;

 private:
  std::vector<RealizedBandit> bandits_;
};

ContextualEnv contextual(const std::vector<BanditSpec>& specs, RngStream& rng);

}  // namespace poets
