#include "poets/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "poets/common.hpp"

namespace poets {

double entropy(const PolicyDistribution& pi) {
  double h = 0.0;
  for (int a = 0; a < pi.n_actions(); ++a)
    if (pi.probs[a] > 0.0) h -= pi.probs[a] * pi.log_probs[a];
  return h;
}

double normalized_jsd(const std::vector<PolicyDistribution>& members) {
  const int n = static_cast<int>(members.size());
  if (n <= 1) return 0.0;

  const int n_actions = members[0].n_actions();
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(n_actions);
  for (const PolicyDistribution& pi : members) avg += pi.probs;
  avg /= static_cast<double>(n);

  double kl_sum = 0.0;
  for (const PolicyDistribution& pi : members)
    for (int a = 0; a < n_actions; ++a)
      if (pi.probs[a] > 0.0)
        kl_sum += pi.probs[a] * (pi.log_probs[a] - safe_log(avg[a]));

  return kl_sum / (n * std::log(static_cast<double>(n)));
}

double best_seen(const std::vector<double>& observed) {
  if (observed.empty()) throw ConfigError("best_seen needs at least one observation");
  return *std::max_element(observed.begin(), observed.end());
}

}  // namespace poets
