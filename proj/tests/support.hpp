#pragma once

#include <random>

#include "cfep/types.hpp"

namespace cfep::testing {

inline cd randComplex(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale / std::sqrt(2.0));
  return {n(rng), n(rng)};
}

inline double randUniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline CVec randCVec(std::mt19937_64& rng, int n, double scale = 1.0) {
  CVec v(n);
  for (int i = 0; i < n; ++i) v[i] = randComplex(rng, scale);
  return v;
}

inline RVec randPositive(std::mt19937_64& rng, int n, double lo = 0.2, double hi = 3.0) {
  RVec v(n);
  for (int i = 0; i < n; ++i) v[i] = randUniform(rng, lo, hi);
  return v;
}

// G G^H + eps I, well conditioned for small n.
inline Eigen::MatrixXcd randHpd(std::mt19937_64& rng, int n, double eps = 0.5) {
  Eigen::MatrixXcd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = randComplex(rng);
  return g * g.adjoint() + eps * Eigen::MatrixXcd::Identity(n, n);
}

inline Pmf randPmf(std::mt19937_64& rng, int n) {
  Pmf p(n);
  for (int i = 0; i < n; ++i) p[i] = randUniform(rng, 0.05, 1.0);
  return p / p.sum();
}

}  // namespace cfep::testing
