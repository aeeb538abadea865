#pragma once

#include <vector>

#include <Eigen/Dense>

#include "poets/common.hpp"
#include "poets/rng.hpp"

namespace poets {

// Feature vector for one context. Non-contextual problems use a single context
// whose features are fixed; the experiment driver uses one-hot context
// encodings so each context owns a column of the trunk.
struct ContextFeatures {
  int id = 0;
  Eigen::VectorXd phi;  // length d_h, finite
};

// Shared-trunk / low-rank-branch parameterization of an ensemble of softmax
// policies. Member i has logits h_i(x) = (W + B_i A_i) phi(x): one trunk W of
// shape |A| x d_h shared by everyone, plus a rank-r adapter per member.
struct EnsembleParams {
  Eigen::MatrixXd trunk;                  // |A| x d_h
  std::vector<Eigen::MatrixXd> branch_a;  // n matrices, r x d_h
  std::vector<Eigen::MatrixXd> branch_b;  // n matrices, |A| x r
  int rank = 1;

  int n_members() const { return static_cast<int>(branch_a.size()); }
  int n_actions() const { return static_cast<int>(trunk.rows()); }
  int feature_dim() const { return static_cast<int>(trunk.cols()); }
};

// Construct an ensemble. B_i starts at zero so every member coincides with the
// trunk policy; A_i entries are i.i.d. Gaussian with standard deviation
// 1/sqrt(d_h) so the B_i gradient is nonzero from the first step.
EnsembleParams make_ensemble(int n_actions, int feature_dim, int rank, int n_members,
                             RngStream& rng);

// A finite-action distribution with matched probabilities and log-probabilities.
struct PolicyDistribution {
  Eigen::VectorXd probs;      // nonnegative, sums to 1
  Eigen::VectorXd log_probs;  // natural logs (floored, never -inf)

  int n_actions() const { return static_cast<int>(probs.size()); }
};

// Build a distribution from an explicit probability vector (normalizes and
// floors the logs). Used for hand-constructed references and mixtures.
PolicyDistribution distribution_from_probs(const Eigen::VectorXd& probs);

// Stable softmax over raw logits (log-sum-exp shifted by the max).
PolicyDistribution softmax_distribution(const Eigen::VectorXd& logits);

// One round's worth of sampled data: G actions with the index of the ensemble
// member that proposed each, the observed rewards (empty until the environment
// has been queried), and the log-probabilities every member assigned to each
// action at ingestion time (used for importance ratios during replay).
struct RolloutBatch {
  int context_id = 0;
  std::vector<int> actions;
  std::vector<int> members;
  Eigen::VectorXd rewards;        // size G once evaluated, else size 0
  Eigen::MatrixXd old_log_probs;  // n x G, filled at ingestion

  int size() const { return static_cast<int>(actions.size()); }
};

// Gradient (or any tangent value) with the same shape as EnsembleParams.
// Supports the little arithmetic the optimizer needs.
struct ParamGradient {
  Eigen::MatrixXd trunk;
  std::vector<Eigen::MatrixXd> branch_a;
  std::vector<Eigen::MatrixXd> branch_b;

  static ParamGradient zeros_like(const EnsembleParams& params);

  void add_scaled(const ParamGradient& other, double scale);
  void scale(double factor);
  double squared_norm() const;
  bool all_finite() const;
};

// Softmax policy of member i at temperature tau: softmax(h_i(x) / tau) with a
// numerically stable log-sum-exp. Throws std::out_of_range for a bad member
// index and NumericalError if the logits are not finite.
PolicyDistribution member_distribution(const EnsembleParams& params, int member,
                                       const ContextFeatures& x, double temperature);

// Uniform mixture over members: probabilities are the arithmetic mean of the
// member probability vectors; log-probabilities are recomputed from the mean.
PolicyDistribution mixture_distribution(const EnsembleParams& params,
                                        const ContextFeatures& x, double temperature);

// Sample G (member, action) slots from the mixture: each slot draws a member
// index uniformly, then an action from that member. Rewards are left unset.
RolloutBatch sample_group(const EnsembleParams& params, const ContextFeatures& x,
                          int group_size, double temperature, RngStream& rng);

// Analytic gradient of log pi_i(a | x) with respect to every parameter. For the
// softmax head the logit-space gradient is (e_a - pi) / tau; it chains to
//   d/dW     = g phi^T
//   d/dB_i   = g (A_i phi)^T
//   d/dA_i   = B_i^T g phi^T
// Branches j != i receive exactly zero.
ParamGradient grad_log_prob(const EnsembleParams& params, int member,
                            const ContextFeatures& x, int action, double temperature);

}  // namespace poets
