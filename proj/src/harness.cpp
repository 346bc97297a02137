#include "cfep/harness.hpp"

#include <chrono>
#include <exception>

namespace cfep {

double nmse(std::span<const Eigen::MatrixXcd> estimate, std::span<const Eigen::MatrixXcd> truth) {
  if (estimate.size() != truth.size()) throw ContractError("nmse: AP count mismatch");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t l = 0; l < truth.size(); ++l) {
    if (estimate[l].rows() != truth[l].rows() || estimate[l].cols() != truth[l].cols())
      throw ContractError("nmse: shape mismatch");
    num += (estimate[l] - truth[l]).squaredNorm();
    den += truth[l].squaredNorm();
  }
  if (!(den > 0.0)) throw ContractError("nmse: true channels are all zero");
  return num / den;
}

double ser(std::span<const CategoricalMsg> beliefs, const Eigen::MatrixXi& truth) {
  const Eigen::Index K = truth.rows();
  const Eigen::Index T = truth.cols();
  if (static_cast<Eigen::Index>(beliefs.size()) != K * T) throw ContractError("ser: belief count mismatch");
  if (K * T == 0) throw ContractError("ser: no symbols");
  int errors = 0;
  for (Eigen::Index k = 0; k < K; ++k)
    for (Eigen::Index t = 0; t < T; ++t)
      if (beliefs[static_cast<std::size_t>(k * T + t)].argmax() != truth(k, t)) ++errors;
  return static_cast<double>(errors) / static_cast<double>(K * T);
}

std::vector<Eigen::MatrixXcd> mmseGenieEstimate(const Realization& r, const ChannelModel& channels,
                                                double noiseVar) {
  const int K = channels.numUsers();
  const Eigen::Index P = r.Xp.cols();
  const Eigen::Index T = r.X.cols();
  Eigen::MatrixXcd S(K, P + T);
  S << r.Xp, r.X;
  const Eigen::MatrixXcd gram = S * S.adjoint();

  std::vector<Eigen::MatrixXcd> out;
  out.reserve(static_cast<std::size_t>(channels.numAps()));
  for (int l = 0; l < channels.numAps(); ++l) {
    Eigen::MatrixXcd Yfull(r.Yp[l].rows(), P + T);
    Yfull << r.Yp[l], r.Y[l];
    // Hhat = Y S^H (S S^H + sigma_v^2 Xi^-1)^-1, rows of H independent.
    Eigen::MatrixXcd M = gram;
    for (int k = 0; k < K; ++k) M(k, k) += noiseVar / channels.variance(l, k);
    const Eigen::LDLT<Eigen::MatrixXcd> ldlt(M);
    if (ldlt.info() != Eigen::Success) throw NumericError("mmse genie: factorization failed");
    // M is Hermitian, so Hhat^H = M^-1 S Y^H.
    const Eigen::MatrixXcd hhatAdj = ldlt.solve(S * Yfull.adjoint());
    out.push_back(hhatAdj.adjoint());
  }
  return out;
}

std::vector<Eigen::MatrixXcd> pilotOnlyEstimate(const Realization& r, const ChannelModel& channels,
                                                const PilotBook& pilots, const EngineParams& params) {
  std::vector<Eigen::MatrixXcd> out;
  out.reserve(static_cast<std::size_t>(channels.numAps()));
  EngineParams p = params;
  p.genieSymbols.clear();
  for (int l = 0; l < channels.numAps(); ++l) out.push_back(channelEstimate(makeWorkspace(l, r, channels, pilots, p)));
  return out;
}

JobSetup prepareJob(const RunConfig& config, int powerIndex, int realization) {
  config.validate();
  if (powerIndex < 0 || powerIndex >= static_cast<int>(config.txPowerDbmList.size()))
    throw ContractError("power index out of range");
  if (realization < 0) throw ContractError("realization index must be >= 0");
  const ScenarioConfig& sc = config.scenario;
  const std::uint64_t jobSeed =
      mixSeed(config.seed, static_cast<std::uint64_t>(powerIndex), static_cast<std::uint64_t>(realization));

  JobSetup job;
  job.geometry = sc.redrawUts ? buildGeometry(sc, mixSeed(jobSeed, 1)) : buildGeometry(sc, mixSeed(config.seed, 0xF1));
  job.channels = buildChannelModel(job.geometry, sc.numAntennas);

  const double txPower = dbmToWatts(config.txPowerDbmList[static_cast<std::size_t>(powerIndex)]);
  const double noiseVar = dbmToWatts(sc.noiseDbm);
  const Constellation unit = Constellation::byName(sc.constellation);
  const CategoricalMsg prior = CategoricalMsg::uniform(unit.size());
  job.pilots = assignPilots(sc.numUts, sc.pilotLength, txPower);
  job.realization = drawRealization(job.channels, job.pilots, sc.numSlots, unit, prior, noiseVar, mixSeed(jobSeed, 2));

  job.params.constellation = unit.scaled(std::sqrt(txPower));
  job.params.prior = prior;
  job.params.noiseVar = noiseVar;
  job.params.txPower = txPower;
  job.params.pilotLength = sc.pilotLength;
  job.params.mode = config.algorithm.mode;
  job.params.damping = config.algorithm.damping;
  job.params.precFloor = config.algorithm.precisionFloor / noiseVar;
  job.params.validate();

  job.graph = config.algorithm.graph == GraphKind::tree ? spanningTree(job.geometry.apGraph, config.algorithm.treeRoot)
                                                        : job.geometry.apGraph;
  job.snr = txPower * job.channels.perLinkVariance.mean() / noiseVar;
  return job;
}

RunOptions runOptions(const RunConfig& config) {
  RunOptions opts;
  opts.iteration.schedule = config.algorithm.schedule;
  opts.iteration.exec = Exec::serial;
  opts.maxIterations = config.algorithm.maxIterations;
  opts.tolerance = config.algorithm.tolerance;
  return opts;
}

std::vector<ResultRecord> runJob(const RunConfig& config, int powerIndex, int realization) {
  using Clock = std::chrono::steady_clock;
  const JobSetup job = prepareJob(config, powerIndex, realization);
  const RunOptions opts = runOptions(config);
  const Realization& r = job.realization;

  std::vector<ResultRecord> out;
  for (Estimator est : config.estimators) {
    ResultRecord rec;
    rec.txPowerDbm = config.txPowerDbmList[static_cast<std::size_t>(powerIndex)];
    rec.estimator = est;
    rec.realization = realization;
    rec.snr = job.snr;
    const auto start = Clock::now();
    switch (est) {
      case Estimator::proposed:
      case Estimator::genieEp: {
        EngineParams params = job.params;
        if (est == Estimator::genieEp)
          for (Eigen::Index k = 0; k < r.symbolIndex.rows(); ++k)
            for (Eigen::Index t = 0; t < r.symbolIndex.cols(); ++t) params.genieSymbols.push_back(r.symbolIndex(k, t));
        auto engine = DecentralizedEp::fromRealization(r, job.channels, job.pilots, job.graph, std::move(params));
        const RunSummary summary = engine.run(opts);
        rec.nmse = nmse(engine.channelEstimates(), r.H);
        rec.ser = ser(engine.symbolBeliefs(0), r.symbolIndex);
        rec.iterations = summary.iterations;
        rec.clamps = summary.diag.clamps;
        break;
      }
      case Estimator::mmseGenie:
        rec.nmse = nmse(mmseGenieEstimate(r, job.channels, job.params.noiseVar), r.H);
        break;
      case Estimator::pilotOnly:
        rec.nmse = nmse(pilotOnlyEstimate(r, job.channels, job.pilots, job.params), r.H);
        break;
    }
    if (!std::isfinite(rec.nmse)) throw NumericError("non-finite NMSE");
    rec.wallSeconds = std::chrono::duration<double>(Clock::now() - start).count();
    out.push_back(std::move(rec));
  }
  return out;
}

SuiteResult runEstimatorSuite(const RunConfig& config, Exec exec) {
  config.validate();
  const int powers = static_cast<int>(config.txPowerDbmList.size());
  const int jobs = powers * config.realizations;
  std::vector<std::vector<ResultRecord>> perJob(static_cast<std::size_t>(jobs));
  std::vector<std::string> errors(static_cast<std::size_t>(jobs));

  forEachIndex(exec, jobs, [&](int j) {
    const int p = j / config.realizations;
    const int r = j % config.realizations;
    try {
      perJob[static_cast<std::size_t>(j)] = runJob(config, p, r);
    } catch (const std::exception& e) {
      char head[96];
      std::snprintf(head, sizeof head, "power %g dBm, realization %d: ", config.txPowerDbmList[p], r);
      errors[static_cast<std::size_t>(j)] = head + std::string(e.what());
    }
  });

  SuiteResult result;
  result.jobs = jobs;
  for (int j = 0; j < jobs; ++j) {
    if (!errors[static_cast<std::size_t>(j)].empty()) {
      ++result.failedJobs;
      result.failures.push_back(std::move(errors[static_cast<std::size_t>(j)]));
      continue;
    }
    for (auto& rec : perJob[static_cast<std::size_t>(j)]) result.records.push_back(std::move(rec));
  }
  return result;
}

}  // namespace cfep
