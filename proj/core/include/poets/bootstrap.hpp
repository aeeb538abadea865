#pragma once

#include <deque>

#include <Eigen/Dense>
#include <json.hpp>

#include "poets/policy.hpp"
#include "poets/rng.hpp"

namespace poets {

// Per-member, per-sample resampling weights for one batch. Raw draws are
// i.i.d. Poisson with mean 1 (one independent draw per member and sample,
// emulating sampling-with-replacement online); the stored entries are the
// interpolation lambda * w + (1 - lambda), which recovers plain unweighted
// averaging at lambda = 0 and the full bootstrap at lambda = 1. The mean is 1
// for every lambda.
struct PoissonWeights {
  Eigen::MatrixXd w;  // n_members x group_size
  double lambda = 1.0;

  int n_members() const { return static_cast<int>(w.rows()); }
  int group_size() const { return static_cast<int>(w.cols()); }
};

// Draw an n x G weight matrix. The raw Poisson variates are always drawn, even
// at lambda = 0, so the consumed RNG stream is identical across lambda
// settings and ablations stay comparable draw-for-draw.
PoissonWeights draw_weights(RngStream& rng, int n_members, int group_size, double lambda);

// Aligned FIFO storage for the most recent batches: actions (with member
// indices and ingestion-time log-probabilities), rewards, and weights always
// move together. Weights are drawn once at ingestion and never redrawn, which
// keeps each member's bootstrap resample consistent across replay epochs.
// Eviction is strictly oldest-first once capacity is reached.
class ReplayBuffers {
 public:
  explicit ReplayBuffers(int capacity);

  void push(RolloutBatch batch, PoissonWeights weights);

  // t is 1-based: fetch(1) is the oldest stored batch, fetch(size()) the newest.
  struct Entry {
    const RolloutBatch& batch;
    const PoissonWeights& weights;
  };
  Entry fetch(int t) const;

  int size() const { return static_cast<int>(batches_.size()); }
  int capacity() const { return capacity_; }

  nlohmann::json to_json() const;
  static ReplayBuffers from_json(const nlohmann::json& j);

 private:
  int capacity_;
  std::deque<RolloutBatch> batches_;
  std::deque<PoissonWeights> weights_;
};

}  // namespace poets
