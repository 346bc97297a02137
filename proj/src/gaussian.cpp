#include "cfep/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace cfep {

namespace {

constexpr double kNormTol = 1e-9;

bool finite(cd z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace

// ---------------------------------------------------------------------------
// DiagGaussianMsg

DiagGaussianMsg::DiagGaussianMsg(RVec prec, CVec precMean) : prec_(std::move(prec)), precMean_(std::move(precMean)) {
  if (prec_.size() != precMean_.size())
    throw ContractError("DiagGaussianMsg: prec/precMean size mismatch");
  for (int i = 0; i < prec_.size(); ++i) {
    if (!std::isfinite(prec_[i]) || prec_[i] < 0.0)
      throw ContractError("DiagGaussianMsg: precision must be finite and nonnegative");
    if (!finite(precMean_[i]))
      throw ContractError("DiagGaussianMsg: non-finite precision-mean");
    if (prec_[i] == 0.0 && precMean_[i] != cd{})
      throw ContractError("DiagGaussianMsg: non-informative component with nonzero precMean");
  }
}

DiagGaussianMsg DiagGaussianMsg::nonInformative(int dim) {
  return DiagGaussianMsg(RVec::Zero(dim), CVec::Zero(dim));
}

DiagGaussianMsg DiagGaussianMsg::fromMoments(const CVec& mean, const RVec& variance) {
  if (mean.size() != variance.size())
    throw ContractError("fromMoments: mean/variance size mismatch");
  RVec prec(variance.size());
  CVec pm(variance.size());
  for (int i = 0; i < variance.size(); ++i) {
    if (!(variance[i] > 0.0))
      throw NumericError("fromMoments: variance must be positive");
    if (std::isinf(variance[i])) {
      prec[i] = 0.0;
      pm[i] = 0.0;
    } else {
      prec[i] = 1.0 / variance[i];
      pm[i] = prec[i] * mean[i];
    }
  }
  return DiagGaussianMsg(std::move(prec), std::move(pm));
}

CVec DiagGaussianMsg::mean() const {
  CVec m(dim());
  for (int i = 0; i < dim(); ++i) m[i] = prec_[i] > 0.0 ? precMean_[i] / prec_[i] : cd{};
  return m;
}

RVec DiagGaussianMsg::variance() const {
  RVec v(dim());
  for (int i = 0; i < dim(); ++i)
    v[i] = prec_[i] > 0.0 ? 1.0 / prec_[i] : std::numeric_limits<double>::infinity();
  return v;
}

// ---------------------------------------------------------------------------
// Constellation

Constellation Constellation::bpsk() { return {{cd{1.0, 0.0}, cd{-1.0, 0.0}}}; }

Constellation Constellation::qam4() {
  const double a = 1.0 / std::numbers::sqrt2;
  return {{cd{a, a}, cd{-a, a}, cd{-a, -a}, cd{a, -a}}};
}

Constellation Constellation::qam16() {
  Constellation c;
  const double scale = 1.0 / std::sqrt(10.0);
  for (int re : {-3, -1, 1, 3})
    for (int im : {-3, -1, 1, 3}) c.points.emplace_back(re * scale, im * scale);
  return c;
}

Constellation Constellation::byName(std::string_view name) {
  if (name == "bpsk") return bpsk();
  if (name == "4qam" || name == "qpsk") return qam4();
  if (name == "16qam") return qam16();
  throw ContractError("unknown constellation '" + std::string(name) + "'");
}

double Constellation::averagePower() const {
  double p = 0.0;
  for (cd s : points) p += std::norm(s);
  return points.empty() ? 0.0 : p / static_cast<double>(points.size());
}

Constellation Constellation::scaled(double amplitude) const {
  Constellation c = *this;
  for (cd& s : c.points) s *= amplitude;
  return c;
}

void Constellation::validate() const {
  if (points.empty() || size() > kMaxSymbols)
    throw ContractError("constellation size must be in [1, " + std::to_string(kMaxSymbols) + "]");
  for (cd s : points) {
    if (!finite(s)) throw ContractError("constellation point is not finite");
    if (std::abs(s) == 0.0) throw ContractError("constellation contains the zero point");
  }
}

// ---------------------------------------------------------------------------
// CategoricalMsg

CategoricalMsg::CategoricalMsg(Pmf pmf) : pmf_(std::move(pmf)) {
  if (pmf_.size() == 0 || pmf_.size() > kMaxSymbols) throw ContractError("CategoricalMsg: bad size");
  double sum = 0.0;
  for (int i = 0; i < pmf_.size(); ++i) {
    if (!std::isfinite(pmf_[i]) || pmf_[i] < 0.0) throw ContractError("CategoricalMsg: invalid probability");
    sum += pmf_[i];
  }
  if (std::abs(sum - 1.0) > kNormTol) throw ContractError("CategoricalMsg: pmf not normalized");
}

CategoricalMsg CategoricalMsg::uniform(int size) {
  return CategoricalMsg(Pmf::Constant(size, 1.0 / size));
}

CategoricalMsg CategoricalMsg::pointMass(int size, int index) {
  if (index < 0 || index >= size) throw ContractError("pointMass: index out of range");
  Pmf p = Pmf::Zero(size);
  p[index] = 1.0;
  return CategoricalMsg(std::move(p));
}

CategoricalMsg CategoricalMsg::fromLogWeights(const Pmf& logWeights) {
  const double top = logWeights.maxCoeff();
  if (!(top > -std::numeric_limits<double>::infinity()) || std::isnan(top))
    throw NumericError("message underflow: all log-weights are -inf");
  Pmf p(logWeights.size());
  double sum = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    // finite weights never reach an exact zero, so later products stay defined
    const double rel = logWeights[i] - top;
    p[i] = rel == -std::numeric_limits<double>::infinity() ? 0.0 : std::exp(std::max(rel, kMinLogRatio));
    sum += p[i];
  }
  p /= sum;
  CategoricalMsg msg;
  msg.pmf_ = std::move(p);
  return msg;
}

int CategoricalMsg::argmax() const {
  int best = 0;
  for (int i = 1; i < size(); ++i)
    if (pmf_[i] > pmf_[best]) best = i;
  return best;
}

// ---------------------------------------------------------------------------
// Message algebra

DiagGaussianMsg gaussianProduct(const DiagGaussianMsg& a, const DiagGaussianMsg& b) {
  if (a.dim() != b.dim()) throw ContractError("gaussianProduct: dimension mismatch");
  return DiagGaussianMsg(a.prec() + b.prec(), a.precMean() + b.precMean());
}

DiagGaussianMsg gaussianDivide(const DiagGaussianMsg& num, const DiagGaussianMsg& den, double floor,
                               Diagnostics* diag) {
  if (num.dim() != den.dim()) throw ContractError("gaussianDivide: dimension mismatch");
  if (!(floor > 0.0)) throw ContractError("gaussianDivide: floor must be positive");
  RVec prec = num.prec() - den.prec();
  CVec pm = num.precMean() - den.precMean();
  for (int i = 0; i < prec.size(); ++i) {
    if (prec[i] >= floor) continue;
    const cd m = num.prec()[i] > 0.0 ? num.precMean()[i] / num.prec()[i] : cd{};
    prec[i] = floor;
    pm[i] = floor * m;
    if (diag) ++diag->clamps;
  }
  return DiagGaussianMsg(std::move(prec), std::move(pm));
}

DiagGaussianMsg projectMixtureToDiagGaussian(const CategoricalMsg& weights,
                                             std::span<const FullGaussian> components) {
  if (weights.size() != static_cast<int>(components.size()) || components.empty())
    throw ContractError("projectMixture: one component per weight required");
  if (std::abs(weights.pmf().sum() - 1.0) > kNormTol)
    throw ContractError("projectMixture: weights not normalized");
  const int n = static_cast<int>(components.front().mean.size());
  CVec mean = CVec::Zero(n);
  for (std::size_t s = 0; s < components.size(); ++s) {
    const auto& c = components[s];
    if (c.mean.size() != n || c.cov.rows() != n || c.cov.cols() != n)
      throw ContractError("projectMixture: component dimension mismatch");
    if (weights[static_cast<int>(s)] > 0.0) mean += weights[static_cast<int>(s)] * c.mean;
  }
  RVec var = RVec::Zero(n);
  for (std::size_t s = 0; s < components.size(); ++s) {
    const double w = weights[static_cast<int>(s)];
    if (w <= 0.0) continue;
    const auto& c = components[s];
    for (int i = 0; i < n; ++i) var[i] += w * (c.cov(i, i).real() + std::norm(c.mean[i] - mean[i]));
  }
  for (int i = 0; i < n; ++i)
    if (!(var[i] > 0.0) || !std::isfinite(var[i])) throw NumericError("projectMixture: degenerate variance");
  return DiagGaussianMsg::fromMoments(mean, var);
}

SymbolMoments categoricalMoments(const CategoricalMsg& msg, const Constellation& constellation) {
  if (msg.size() != constellation.size()) throw ContractError("categoricalMoments: size mismatch");
  SymbolMoments m;
  for (int i = 0; i < msg.size(); ++i) {
    m.mean += msg[i] * constellation.points[i];
    m.second += msg[i] * std::norm(constellation.points[i]);
  }
  m.variance = std::max(0.0, m.second - std::norm(m.mean));
  return m;
}

double matrixIdentityCheck(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
    throw ContractError("matrixIdentityCheck: square matrices of equal size required");
  Eigen::FullPivLU<Eigen::MatrixXcd> luA(a), luB(b), luSum(a + b);
  if (!luA.isInvertible() || !luB.isInvertible() || !luSum.isInvertible())
    throw NumericError("matrixIdentityCheck: singular input");
  const Eigen::MatrixXcd harmonic = (luA.inverse() + luB.inverse()).inverse();
  const Eigen::MatrixXcd sumInv = luSum.inverse();
  const Eigen::MatrixXcd left = a * sumInv * b;
  const Eigen::MatrixXcd right = b * sumInv * a;
  const double scale = harmonic.norm();
  return std::max((harmonic - left).norm(), (harmonic - right).norm()) / scale;
}

// ---------------------------------------------------------------------------
// HermitianFactor

HermitianFactor::HermitianFactor(const CMat& cov, Diagnostics* diag) : dim_(static_cast<int>(cov.rows())) {
  if (cov.rows() != cov.cols() || dim_ == 0) throw ContractError("HermitianFactor: square matrix required");
  const double trace = cov.diagonal().real().sum();
  if (!(trace > 0.0) || !std::isfinite(trace)) throw NumericError("covariance has non-positive trace");
  const double jitter = 1e-12 * trace / dim_;

  // Gershgorin bound first; the eigen solve is only needed near singularity.
  double gershgorin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < dim_; ++i) {
    double off = 0.0;
    for (int j = 0; j < dim_; ++j)
      if (j != i) off += std::abs(cov(i, j));
    gershgorin = std::min(gershgorin, cov(i, i).real() - off);
  }
  CMat work = cov;
  if (gershgorin < jitter) {
    Eigen::SelfAdjointEigenSolver<CMat> eig(cov, Eigen::EigenvaluesOnly);
    const double minEig = eig.eigenvalues().minCoeff();
    if (minEig < jitter) {
      if (minEig + jitter <= 0.0) throw NumericError("covariance is not positive definite");
      work.diagonal().array() += jitter;
      if (diag) ++diag->jitters;
    }
  }
  llt_.compute(work);
  if (llt_.info() != Eigen::Success) throw NumericError("covariance factorization failed");
}

CMat HermitianFactor::inverse() const { return llt_.solve(CMat::Identity(dim_, dim_)); }

double HermitianFactor::logDet() const {
  double s = 0.0;
  const auto& l = llt_.matrixLLT();
  for (int i = 0; i < dim_; ++i) s += std::log(l(i, i).real());
  return 2.0 * s;
}

double HermitianFactor::quadForm(const CVec& rhs) const {
  const CVec w = llt_.matrixL().solve(rhs);
  return w.squaredNorm();
}

double gaussianLogPdf(const CVec& obs, const CVec& mean, const CMat& cov, Diagnostics* diag) {
  if (obs.size() != mean.size() || cov.rows() != obs.size())
    throw ContractError("gaussianLogPdf: dimension mismatch");
  const HermitianFactor f(cov, diag);
  const int n = static_cast<int>(obs.size());
  return -f.quadForm(obs - mean) - (n * std::log(std::numbers::pi) + f.logDet());
}

}  // namespace cfep
