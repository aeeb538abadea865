#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace poets {

// Raised for malformed configuration (unknown method names, empty seed lists,
// inconsistent shapes requested at construction time). The CLI maps this to
// exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when a computation produces non-finite values it cannot recover from
// (NaN gradients, covariance that stays indefinite after repair). The CLI maps
// this to exit code 3.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Probabilities are clamped here before logs so that KL/JSD arithmetic stays
// finite even when a distribution carries exact zeros.
inline constexpr double kLogFloor = 1e-300;

inline double safe_log(double p) { return std::log(p < kLogFloor ? kLogFloor : p); }

}  // namespace poets
