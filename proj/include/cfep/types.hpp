#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cfep {

using cd = std::complex<double>;

// Per-AP vectors and matrices live on the stack; N and |S| are bounded.
inline constexpr int kMaxAntennas = 8;
inline constexpr int kMaxSymbols = 64;

using CVec = Eigen::Matrix<cd, Eigen::Dynamic, 1, 0, kMaxAntennas, 1>;
using RVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxAntennas, 1>;
using CMat = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxAntennas, kMaxAntennas>;
using Pmf = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxSymbols, 1>;

/// Violated precondition (dimension mismatch, unnormalized pmf, bad config).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical breakdown: non-PD covariance, pmf underflow, singular input.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Counters that hot-path numerics bump instead of failing.
struct Diagnostics {
  std::size_t clamps = 0;   // negative/small precisions clamped in gaussianDivide
  std::size_t jitters = 0;  // covariances regularized before factorization

  Diagnostics& operator+=(const Diagnostics& o) {
    clamps += o.clamps;
    jitters += o.jitters;
    return *this;
  }
};

}  // namespace cfep
