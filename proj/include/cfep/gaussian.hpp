#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfep/types.hpp"

namespace cfep {

/// Circularly-symmetric complex Gaussian with diagonal covariance, stored in
/// natural parameters: prec = diag(C)^-1 and precMean = prec .* mean.
/// A zero precision entry is a non-informative component (precMean is 0 there).
class DiagGaussianMsg {
 public:
  DiagGaussianMsg() = default;
  DiagGaussianMsg(RVec prec, CVec precMean);

  static DiagGaussianMsg nonInformative(int dim);
  static DiagGaussianMsg fromMoments(const CVec& mean, const RVec& variance);

  int dim() const { return static_cast<int>(prec_.size()); }
  const RVec& prec() const { return prec_; }
  const CVec& precMean() const { return precMean_; }

  CVec mean() const;
  /// +inf where the component is non-informative.
  RVec variance() const;
  bool informative() const { return dim() > 0 && (prec_.array() > 0.0).all(); }

 private:
  RVec prec_;
  CVec precMean_;
};

/// Full-covariance complex Gaussian (conditional channel posteriors, CLT interference).
struct FullGaussian {
  CVec mean;
  CMat cov;
};

/// Ordered constellation set S. Points are stored already scaled to the
/// transmit amplitude used by the engine.
struct Constellation {
  std::vector<cd> points;

  static Constellation bpsk();
  static Constellation qam4();
  static Constellation qam16();
  /// "bpsk", "4qam"/"qpsk", "16qam"; all unit average power.
  static Constellation byName(std::string_view name);

  int size() const { return static_cast<int>(points.size()); }
  double averagePower() const;
  Constellation scaled(double amplitude) const;
  /// Non-empty, at most kMaxSymbols, no zero point (conditioning divides by x).
  void validate() const;
};

inline constexpr double kMinLogRatio = -700.0;

/// Normalized pmf over a constellation; the constellation itself is passed
/// alongside so message stores do not duplicate it.
class CategoricalMsg {
 public:
  CategoricalMsg() = default;
  explicit CategoricalMsg(Pmf pmf);  // validates normalization

  static CategoricalMsg uniform(int size);
  static CategoricalMsg pointMass(int size, int index);
  /// Normalizes exp(logWeights) with max subtraction. Finite weights more than
  /// -kMinLogRatio below the largest are raised to that level; -inf maps to 0.
  /// Throws NumericError when every weight is -inf (message underflow).
  static CategoricalMsg fromLogWeights(const Pmf& logWeights);

  int size() const { return static_cast<int>(pmf_.size()); }
  const Pmf& pmf() const { return pmf_; }
  double operator[](int i) const { return pmf_[i]; }
  int argmax() const;  // ties go to the lowest index

 private:
  Pmf pmf_;
};

struct SymbolMoments {
  cd mean;
  double variance = 0.0;
  double second = 0.0;  // E|x|^2
};

DiagGaussianMsg gaussianProduct(const DiagGaussianMsg& a, const DiagGaussianMsg& b);

/// Componentwise quotient num/den. Components whose precision falls below
/// `floor` are reset to precision `floor` at the numerator's mean; each such
/// reset increments diag->clamps.
DiagGaussianMsg gaussianDivide(const DiagGaussianMsg& num, const DiagGaussianMsg& den, double floor,
                               Diagnostics* diag = nullptr);

/// Moment-matches a Gaussian mixture onto the diagonal family: mixture mean
/// and the diagonal of the mixture covariance.
DiagGaussianMsg projectMixtureToDiagGaussian(const CategoricalMsg& weights,
                                             std::span<const FullGaussian> components);

SymbolMoments categoricalMoments(const CategoricalMsg& msg, const Constellation& constellation);

/// Max relative deviation between (A^-1 + B^-1)^-1, A (A+B)^-1 B and B (A+B)^-1 A.
double matrixIdentityCheck(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

/// ln CN(obs | mean, cov) = -(obs-mean)^H cov^-1 (obs-mean) - ln det(pi cov).
double gaussianLogPdf(const CVec& obs, const CVec& mean, const CMat& cov, Diagnostics* diag = nullptr);

/// Cholesky factor of a Hermitian covariance after the jitter rule: when the
/// smallest eigenvalue is below 1e-12 * trace/N, that amount is added to the
/// diagonal. Throws NumericError if the result is still not positive definite.
class HermitianFactor {
 public:
  explicit HermitianFactor(const CMat& cov, Diagnostics* diag = nullptr);

  CVec solve(const CVec& rhs) const { return llt_.solve(rhs); }
  CMat inverse() const;
  double logDet() const;
  /// rhs^H cov^-1 rhs
  double quadForm(const CVec& rhs) const;

 private:
  Eigen::LLT<CMat> llt_;
  int dim_ = 0;
};

}  // namespace cfep
