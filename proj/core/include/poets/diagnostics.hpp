#pragma once

#include <map>
#include <string>
#include <vector>

#include "poets/policy.hpp"

namespace poets {

// Per-round scalars reported by every run. All logs are natural (entropy and
// divergence in nats). best_seen is non-decreasing across a run by definition;
// jsd lies in [0, 1].
struct MetricsRecord {
  int round = 0;
  double best_seen = 0.0;
  double expected_reward = 0.0;
  double entropy = 0.0;
  double jsd = 0.0;
  double soft_regret = 0.0;
  double cum_soft_regret = 0.0;
  std::map<std::string, double> extras;  // optional per-member values
};

// Shannon entropy -sum pi log pi in nats, with 0 log 0 = 0.
double entropy(const PolicyDistribution& pi);

// Ensemble diversity: (1 / (n ln n)) * sum_i KL(pi_i || pi_avg) where pi_avg is
// the uniform mixture. Normalized into [0, 1]; identical members give 0,
// pairwise-disjoint supports give 1. A single member returns 0 by convention
// (the normalizer is undefined at n = 1).
double normalized_jsd(const std::vector<PolicyDistribution>& members);

// Running maximum of an observation history. Errors on an empty history.
double best_seen(const std::vector<double>& observed);

}  // namespace poets
