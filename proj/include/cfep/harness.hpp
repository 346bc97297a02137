#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfep/config.hpp"
#include "cfep/consensus.hpp"
#include "cfep/scenario.hpp"

namespace cfep {

struct ResultRecord {
  double txPowerDbm = 0.0;
  Estimator estimator = Estimator::proposed;
  int realization = 0;
  double nmse = 0.0;
  std::optional<double> ser;  // EP estimators only
  int iterations = 0;
  std::size_t clamps = 0;
  double snr = 0.0;  // linear, sigma_x^2 * mean(sigma2_lk) / sigma_v^2
  double wallSeconds = 0.0;
};

/// sum_l ||Hhat_l - H_l||_F^2 / sum_l ||H_l||_F^2. Throws ContractError on a
/// shape mismatch or an all-zero truth.
double nmse(std::span<const Eigen::MatrixXcd> estimate, std::span<const Eigen::MatrixXcd> truth);

/// Fraction of entries whose argmax symbol differs from the truth. Beliefs
/// are indexed k*T + t against the K x T index matrix.
double ser(std::span<const CategoricalMsg> beliefs, const Eigen::MatrixXi& truth);

/// Per AP, LMMSE of H_l from [Yp Y] with the symbols [Xp X] known and prior
/// variances from the channel model.
std::vector<Eigen::MatrixXcd> mmseGenieEstimate(const Realization& r, const ChannelModel& channels, double noiseVar);

/// Per AP, the pilot-factor initialization (what the EP engine starts from).
std::vector<Eigen::MatrixXcd> pilotOnlyEstimate(const Realization& r, const ChannelModel& channels,
                                                const PilotBook& pilots, const EngineParams& params);

/// Everything one Monte-Carlo job needs, derived deterministically from the
/// master seed and the (power, realization) indices.
struct JobSetup {
  Geometry geometry;
  ChannelModel channels;
  PilotBook pilots;
  Realization realization;
  EngineParams params;
  ApGraph graph;  // the grid graph, or its spanning tree
  double snr = 0.0;
};

JobSetup prepareJob(const RunConfig& config, int powerIndex, int realization);

RunOptions runOptions(const RunConfig& config);

/// Runs the configured estimators on one job. Throws on any failure.
std::vector<ResultRecord> runJob(const RunConfig& config, int powerIndex, int realization);

struct SuiteResult {
  std::vector<ResultRecord> records;  // ordered by (power, realization, estimator)
  int jobs = 0;
  int failedJobs = 0;
  std::vector<std::string> failures;  // one line per failed job
};

/// Every (power, realization) job, fanned out with `exec`. A failing job is
/// dropped with its diagnostic; the others still complete.
SuiteResult runEstimatorSuite(const RunConfig& config, Exec exec);

}  // namespace cfep
