#include "poets/bootstrap.hpp"

#include <stdexcept>
#include <utility>

#include "poets/serialize.hpp"

namespace poets {

PoissonWeights draw_weights(RngStream& rng, int n_members, int group_size, double lambda) {
  if (lambda < 0.0 || lambda > 1.0) throw ConfigError("lambda must lie in [0, 1]");
  if (n_members < 1 || group_size < 1)
    throw ConfigError("draw_weights: n_members and group_size must be >= 1");
  PoissonWeights out;
  out.lambda = lambda;
  out.w.resize(n_members, group_size);
  for (int i = 0; i < n_members; ++i)
    for (int j = 0; j < group_size; ++j) {
      const double raw = static_cast<double>(rng.poisson_unit());
      out.w(i, j) = lambda * raw + (1.0 - lambda);
    }
  return out;
}

ReplayBuffers::ReplayBuffers(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw ConfigError("replay capacity must be >= 1");
}

void ReplayBuffers::push(RolloutBatch batch, PoissonWeights weights) {
  if (weights.group_size() != batch.size())
    throw ConfigError("replay push: weights and batch sizes differ");
  batches_.push_back(std::move(batch));
  weights_.push_back(std::move(weights));
  while (static_cast<int>(batches_.size()) > capacity_) {
    batches_.pop_front();
    weights_.pop_front();
  }
}

ReplayBuffers::Entry ReplayBuffers::fetch(int t) const {
  if (t < 1 || t > size()) throw std::out_of_range("replay fetch index out of range");
  return Entry{batches_[static_cast<std::size_t>(t - 1)],
               weights_[static_cast<std::size_t>(t - 1)]};
}

nlohmann::json ReplayBuffers::to_json() const {
  nlohmann::json j;
  j["capacity"] = capacity_;
  j["batches"] = nlohmann::json::array();
  j["weights"] = nlohmann::json::array();
  for (const RolloutBatch& b : batches_) {
    nlohmann::json jb;
    jb["context_id"] = b.context_id;
    jb["actions"] = b.actions;
    jb["members"] = b.members;
    jb["rewards"] = json_from_vector(b.rewards);
    jb["old_log_probs"] = json_from_matrix(b.old_log_probs);
    j["batches"].push_back(std::move(jb));
  }
  for (const PoissonWeights& w : weights_) {
    nlohmann::json jw;
    jw["lambda"] = w.lambda;
    jw["w"] = json_from_matrix(w.w);
    j["weights"].push_back(std::move(jw));
  }
  return j;
}

ReplayBuffers ReplayBuffers::from_json(const nlohmann::json& j) {
  ReplayBuffers buffers(j.at("capacity").get<int>());
  const auto& jbatches = j.at("batches");
  const auto& jweights = j.at("weights");
  if (jbatches.size() != jweights.size())
    throw ConfigError("replay checkpoint: batch/weight count mismatch");
  for (std::size_t k = 0; k < jbatches.size(); ++k) {
    RolloutBatch b;
    b.context_id = jbatches[k].at("context_id").get<int>();
    b.actions = jbatches[k].at("actions").get<std::vector<int>>();
    b.members = jbatches[k].at("members").get<std::vector<int>>();
    b.rewards = vector_from_json(jbatches[k].at("rewards"));
    b.old_log_probs = matrix_from_json(jbatches[k].at("old_log_probs"));
    PoissonWeights w;
    w.lambda = jweights[k].at("lambda").get<double>();
    w.w = matrix_from_json(jweights[k].at("w"));
    buffers.push(std::move(b), std::move(w));
  }
  return buffers;
}

}  // namespace poets
