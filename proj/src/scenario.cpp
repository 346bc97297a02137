#include "cfep/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <random>

namespace cfep {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

cd complexGaussian(std::mt19937_64& rng, double variance) {
  std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

void drawUtPositions(Geometry& g, int numUts, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, g.areaSide);
  g.uts.clear();
  for (int k = 0; k < numUts; ++k) {
    const double x = u(rng);
    const double y = u(rng);
    g.uts.push_back({x, y});
  }
}

void printMatrix(std::ostream& os, const Eigen::MatrixXcd& m) {
  char buf[64];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g %.17g", m(i, j).real(), m(i, j).imag());
      os << (j ? "  " : "") << buf;
    }
    os << '\n';
  }
}

}  // namespace

void ScenarioConfig::validate() const {
  if (!(areaSide > 0.0)) throw ContractError("areaSide must be positive");
  if (apGrid < 1) throw ContractError("apGrid must be >= 1");
  if (numUts < 1) throw ContractError("numUts must be >= 1");
  if (numAntennas < 1 || numAntennas > kMaxAntennas)
    throw ContractError("N must be in [1, " + std::to_string(kMaxAntennas) + "]");
  if (pilotLength < 1) throw ContractError("P must be >= 1");
  if (numSlots < 1) throw ContractError("T must be >= 1");
  if (!std::isfinite(noiseDbm)) throw ContractError("noiseDbm must be finite");
  Constellation::byName(constellation).validate();
}

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::uint64_t mixSeed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(master) ^ a) ^ b);
}

double dbmToWatts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double pathLossVariance(double d) {
  if (!(d > 0.0) || !std::isfinite(d)) throw ContractError("pathLossVariance: distance must be positive");
  return std::pow(10.0, (-30.0 - 36.7 * std::log10(d)) / 10.0);
}

Geometry buildGeometry(const ScenarioConfig& config, std::uint64_t seed) {
  config.validate();
  Geometry g;
  g.areaSide = config.areaSide;
  const int grid = config.apGrid;
  if (grid == 1) {
    g.aps.push_back({config.areaSide / 2.0, config.areaSide / 2.0});
  } else {
    const double spacing = config.areaSide / (grid - 1);
    for (int i = 0; i < grid; ++i)
      for (int j = 0; j < grid; ++j) g.aps.push_back({spacing * i, spacing * j});
  }
  g.apGraph = ApGraph(static_cast<int>(g.aps.size()));
  if (grid > 1) {
    const double radius = config.areaSide / (grid - 1) * (1.0 + 1e-9);
    for (std::size_t a = 0; a < g.aps.size(); ++a)
      for (std::size_t b = a + 1; b < g.aps.size(); ++b)
        if (distance(g.aps[a], g.aps[b]) <= radius) g.apGraph.addEdge(static_cast<int>(a), static_cast<int>(b));
  }
  if (!g.apGraph.connected()) throw ContractError("AP graph is disconnected");
  drawUtPositions(g, config.numUts, seed);
  return g;
}

void redrawUts(Geometry& geometry, std::uint64_t seed) {
  drawUtPositions(geometry, static_cast<int>(geometry.uts.size()), seed);
}

ChannelModel buildChannelModel(const Geometry& geometry, int numAntennas) {
  ChannelModel m;
  m.numAntennas = numAntennas;
  m.perLinkVariance.resize(static_cast<Eigen::Index>(geometry.aps.size()),
                           static_cast<Eigen::Index>(geometry.uts.size()));
  for (std::size_t l = 0; l < geometry.aps.size(); ++l)
    for (std::size_t k = 0; k < geometry.uts.size(); ++k) {
      const double d = std::max(kMinLinkDistance, distance(geometry.aps[l], geometry.uts[k]));
      m.perLinkVariance(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) = pathLossVariance(d);
    }
  return m;
}

Eigen::MatrixXcd PilotBook::pilotMatrix() const {
  Eigen::MatrixXcd xp(static_cast<Eigen::Index>(groupOf.size()), length());
  for (std::size_t k = 0; k < groupOf.size(); ++k) xp.row(static_cast<Eigen::Index>(k)) = sequences.row(groupOf[k]);
  return xp;
}

PilotBook assignPilots(int numUsers, int pilotLength, double txPower) {
  if (numUsers < 1 || pilotLength < 1) throw ContractError("assignPilots: K and P must be >= 1");
  if (!(txPower > 0.0)) throw ContractError("assignPilots: transmit power must be positive");
  PilotBook book;
  book.txPower = txPower;
  const double amp = std::sqrt(txPower);
  book.sequences.resize(pilotLength, pilotLength);
  for (int g = 0; g < pilotLength; ++g)
    for (int p = 0; p < pilotLength; ++p)
      book.sequences(g, p) = amp * std::polar(1.0, -2.0 * std::numbers::pi * g * p / pilotLength);
  const int used = std::min(numUsers, pilotLength);
  book.groups.assign(static_cast<std::size_t>(used), {});
  for (int k = 0; k < numUsers; ++k) {
    book.groupOf.push_back(k % pilotLength);
    book.groups[static_cast<std::size_t>(k % pilotLength)].push_back(k);
  }
  return book;
}

Realization drawRealization(const ChannelModel& channels, const PilotBook& pilots, int numSlots,
                            const Constellation& unitConstellation, const CategoricalMsg& prior,
                            double noiseVar, std::uint64_t seed) {
  const int L = channels.numAps();
  const int K = channels.numUsers();
  const int N = channels.numAntennas;
  const int P = pilots.length();
  if (static_cast<int>(pilots.groupOf.size()) != K) throw ContractError("drawRealization: pilot book size mismatch");
  if (prior.size() != unitConstellation.size()) throw ContractError("drawRealization: prior size mismatch");
  if (numSlots < 1 || !(noiseVar >= 0.0)) throw ContractError("drawRealization: bad T or noise variance");

  std::mt19937_64 rng(seed);
  Realization r;
  r.H.resize(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l) {
    r.H[l].resize(N, K);
    for (int k = 0; k < K; ++k)
      for (int n = 0; n < N; ++n) r.H[l](n, k) = complexGaussian(rng, channels.variance(l, k));
  }

  r.Xp = pilots.pilotMatrix();
  const double amp = std::sqrt(pilots.txPower);
  std::discrete_distribution<int> pick(prior.pmf().data(), prior.pmf().data() + prior.size());
  r.X.resize(K, numSlots);
  r.symbolIndex.resize(K, numSlots);
  for (int k = 0; k < K; ++k)
    for (int t = 0; t < numSlots; ++t) {
      const int s = pick(rng);
      r.symbolIndex(k, t) = s;
      r.X(k, t) = amp * unitConstellation.points[static_cast<std::size_t>(s)];
    }

  r.Vp.resize(static_cast<std::size_t>(L));
  r.V.resize(static_cast<std::size_t>(L));
  r.Yp.resize(static_cast<std::size_t>(L));
  r.Y.resize(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l) {
    r.Vp[l].resize(N, P);
    r.V[l].resize(N, numSlots);
    for (int n = 0; n < N; ++n) {
      for (int p = 0; p < P; ++p) r.Vp[l](n, p) = noiseVar > 0.0 ? complexGaussian(rng, noiseVar) : cd{};
      for (int t = 0; t < numSlots; ++t) r.V[l](n, t) = noiseVar > 0.0 ? complexGaussian(rng, noiseVar) : cd{};
    }
    r.Yp[l] = r.H[l] * r.Xp + r.Vp[l];
    r.Y[l] = r.H[l] * r.X + r.V[l];
  }
  return r;
}

void writeRealization(std::ostream& os, const Realization& r) {
  const auto L = r.H.size();
  const auto N = L ? r.H[0].rows() : 0;
  os << "realization L=" << L << " N=" << N << " K=" << r.X.rows() << " P=" << r.Xp.cols()
     << " T=" << r.X.cols() << '\n';
  os << "Xp\n";
  printMatrix(os, r.Xp);
  os << "X\n";
  printMatrix(os, r.X);
  os << "symbols\n";
  for (Eigen::Index k = 0; k < r.symbolIndex.rows(); ++k) {
    for (Eigen::Index t = 0; t < r.symbolIndex.cols(); ++t) os << (t ? " " : "") << r.symbolIndex(k, t);
    os << '\n';
  }
  for (std::size_t l = 0; l < L; ++l) {
    os << "ap " << l << "\nH\n";
    printMatrix(os, r.H[l]);
    os << "Vp\n";
    printMatrix(os, r.Vp[l]);
    os << "V\n";
    printMatrix(os, r.V[l]);
    os << "Yp\n";
    printMatrix(os, r.Yp[l]);
    os << "Y\n";
    printMatrix(os, r.Y[l]);
  }
}

}  // namespace cfep
