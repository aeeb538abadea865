#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Dense>

namespace poets {

// Combine two seeds into one stream seed (splitmix64 finalizer), so runs that
// vary either component get unrelated streams.
inline std::uint64_t mix_seeds(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Deterministic random stream. All variates are derived from the raw mt19937_64
// output with fixed arithmetic rather than std::*_distribution, because the
// standard leaves distribution algorithms implementation-defined and this
// project promises byte-identical outputs for identical seeds on any toolchain.
//
// Every generator below consumes a fixed, call-history-independent number of
// engine words (Box-Muller is evaluated eagerly, nothing is cached), so two
// code paths that issue the same sequence of calls stay in lockstep.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0) : engine_(seed) {}

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; two uniforms per variate, none cached.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;  // log(0) guard; occurs with prob 2^-53
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  // Poisson with mean 1 via Knuth's product-of-uniforms method; exact and
  // cheap at this mean (about e = 2.72 uniforms per draw).
  int poisson_unit() {
    static const double threshold = std::exp(-1.0);
    int k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > threshold);
    return k - 1;
  }

  // Uniform integer on {0, .., n-1}.
  int uniform_int(int n) {
    int k = static_cast<int>(uniform() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }

  // Sample an index from a probability vector by inverse-CDF walk. The vector
  // is assumed normalized; any rounding shortfall lands on the last index.
  int categorical(const Eigen::VectorXd& probs) {
    const double u = uniform();
    double cum = 0.0;
    const int n = static_cast<int>(probs.size());
    for (int a = 0; a < n; ++a) {
      cum += probs[a];
      if (u < cum) return a;
    }
    return n - 1;
  }

  // Engine state round-trips through the standard textual serialization; used
  // by experiment checkpoints.
  std::string save_state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }

  void restore_state(const std::string& text) {
    std::istringstream is(text);
    is >> engine_;
  }

  bool operator==(const RngStream& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace poets
