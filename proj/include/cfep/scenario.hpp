#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cfep/gaussian.hpp"
#include "cfep/graph.hpp"
#include "cfep/types.hpp"

namespace cfep {

/// Physical layout and link-budget settings shared by every realization.
struct ScenarioConfig {
  double areaSide = 400.0;  // meters
  int apGrid = 4;           // APs on an apGrid x apGrid lattice
  int numUts = 8;
  int numAntennas = 2;  // N
  int pilotLength = 6;  // P
  int numSlots = 10;    // T
  std::string constellation = "4qam";
  double noiseDbm = -96.0;
  bool redrawUts = true;  // new UT drop per realization

  int numAps() const { return apGrid * apGrid; }
  void validate() const;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

double distance(Point a, Point b);

struct Geometry {
  double areaSide = 0.0;
  std::vector<Point> aps;
  std::vector<Point> uts;
  ApGraph apGraph;  // APs within one grid spacing are linked
};

/// Diagonal per-link channel covariances sigma2(l, k) * I_N.
struct ChannelModel {
  Eigen::MatrixXd perLinkVariance;  // L x K, linear power
  int numAntennas = 0;

  int numAps() const { return static_cast<int>(perLinkVariance.rows()); }
  int numUsers() const { return static_cast<int>(perLinkVariance.cols()); }
  double variance(int l, int k) const { return perLinkVariance(l, k); }
};

/// Orthogonal pilot sequences and the user -> group assignment.
struct PilotBook {
  double txPower = 0.0;              // sigma_x^2
  Eigen::MatrixXcd sequences;        // P x P, row g is x_{p,g}
  std::vector<int> groupOf;          // user -> group
  std::vector<std::vector<int>> groups;

  int length() const { return static_cast<int>(sequences.cols()); }
  int numGroups() const { return static_cast<int>(groups.size()); }
  /// K x P matrix X_p, row k = sequence of the user's group.
  Eigen::MatrixXcd pilotMatrix() const;
};

struct Realization {
  std::vector<Eigen::MatrixXcd> H;   // per AP, N x K
  Eigen::MatrixXcd Xp;               // K x P
  Eigen::MatrixXcd X;                // K x T
  Eigen::MatrixXi symbolIndex;       // K x T indices into the constellation
  std::vector<Eigen::MatrixXcd> Vp;  // per AP, N x P
  std::vector<Eigen::MatrixXcd> V;   // per AP, N x T
  std::vector<Eigen::MatrixXcd> Yp;  // per AP, N x P
  std::vector<Eigen::MatrixXcd> Y;   // per AP, N x T
};

inline constexpr double kMinLinkDistance = 1.0;  // meters

/// Deterministic seed derivation (splitmix64 over the inputs).
std::uint64_t mixSeed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

double dbmToWatts(double dbm);

/// 10 log10(sigma2) = -30 - 36.7 log10(d). Throws ContractError for d <= 0.
double pathLossVariance(double d);

/// AP lattice from the config; UTs uniform on the square from `seed`.
/// Throws ContractError when the AP graph is disconnected.
Geometry buildGeometry(const ScenarioConfig& config, std::uint64_t seed);

/// Same AP layout, fresh UT positions.
void redrawUts(Geometry& geometry, std::uint64_t seed);

/// Link distances are clamped to kMinLinkDistance before path loss.
ChannelModel buildChannelModel(const Geometry& geometry, int numAntennas);

/// Round-robin k -> k mod P; scaled DFT rows with entries of magnitude sigma_x.
PilotBook assignPilots(int numUsers, int pilotLength, double txPower);

/// One Monte-Carlo draw. `unitConstellation` has unit average power and is
/// scaled by sqrt(txPower); data symbols are drawn from `prior`.
Realization drawRealization(const ChannelModel& channels, const PilotBook& pilots, int numSlots,
                            const Constellation& unitConstellation, const CategoricalMsg& prior,
                            double noiseVar, std::uint64_t seed);

/// Text dump, one field per section. Layout:
///   realization L=<L> N=<N> K=<K> P=<P> T=<T>
///   Xp        K rows of P "re im" pairs
///   X         K rows of T pairs
///   symbols   K rows of T ints
///   ap <l>    then H (N rows of K), Vp, V, Yp, Y (N rows each)
/// Values are printed with %.17g so the dump round-trips exactly.
void writeRealization(std::ostream& os, const Realization& r);

}  // namespace cfep
