#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cfep/consensus.hpp"
#include "cfep/ep_engine.hpp"
#include "cfep/kernels.hpp"
#include "cfep/scenario.hpp"

namespace cfep {

enum class Estimator { proposed, genieEp, mmseGenie, pilotOnly };

inline constexpr Estimator kAllEstimators[] = {Estimator::proposed, Estimator::genieEp, Estimator::mmseGenie,
                                               Estimator::pilotOnly};

std::string_view toString(Estimator e);
Estimator parseEstimator(std::string_view name);
std::string_view toString(ExtrinsicMode m);
ExtrinsicMode parseMode(std::string_view name);
std::string_view toString(Schedule s);
Schedule parseSchedule(std::string_view name);

enum class GraphKind { grid, tree };
std::string_view toString(GraphKind g);
GraphKind parseGraph(std::string_view name);

struct AlgorithmConfig {
  ExtrinsicMode mode = ExtrinsicMode::simplified;
  int maxIterations = 20;
  double tolerance = 1e-6;
  double damping = 1.0;
  double precisionFloor = 1e-8;  // in units of the noise precision 1/sigma_v^2
  Schedule schedule = Schedule::sequential;
  GraphKind graph = GraphKind::grid;
  int treeRoot = 0;
};

struct OutputConfig {
  std::string csvPath;   // empty: no CSV
  std::string plotPath;  // empty: no SVG
  bool traceMessages = true;
  bool traceEnvelopes = true;
};

struct RunConfig {
  ScenarioConfig scenario;
  AlgorithmConfig algorithm;
  std::vector<double> txPowerDbmList{0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0};
  int realizations = 100;
  std::uint64_t seed = 1;
  std::vector<Estimator> estimators{std::begin(kAllEstimators), std::end(kAllEstimators)};
  Exec exec = Exec::serial;  // how realizations are fanned out
  OutputConfig output;

  void validate() const;
};

/// Parses the key/value format:
///
///   # comment
///   key = value
///
/// Lists are comma separated, booleans are true/false. Keys:
///   areaSide apGrid numUts N P T constellation noiseDbm redrawUts
///   txPowerDbmList realizations seed estimators exec
///   mode maxIterations tolerance damping precisionFloor schedule graph treeRoot
///   csv plot traceMessages traceEnvelopes
/// Unknown or repeated keys and malformed values throw ContractError naming
/// the line. The result is validated.
RunConfig parseConfig(std::istream& in);
RunConfig loadConfig(const std::string& path);

/// Writes a config that parses back to the same values.
void writeConfig(std::ostream& os, const RunConfig& config);

}  // namespace cfep
