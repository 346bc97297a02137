#pragma once

#include <limits>
#include <span>
#include <vector>

#include "cfep/ep_engine.hpp"
#include "cfep/gaussian.hpp"
#include "cfep/graph.hpp"
#include "cfep/kernels.hpp"

namespace cfep {

class TraceSink;

/// nu_{from -> to} for every (k, t) entry.
struct ConsensusEnvelope {
  int from = 0;
  int to = 0;
  int iteration = 0;
  std::vector<CategoricalMsg> payload;  // K*T pmfs
};

/// Per-directed-edge nu store plus the bookkeeping for convergence residuals.
class ConsensusState {
 public:
  ConsensusState() = default;
  /// Every nu starts uniform.
  ConsensusState(ApGraph graph, int numEntries, int numSymbols);

  const ApGraph& graph() const { return graph_; }
  int numEntries() const { return entries_; }
  std::span<const CategoricalMsg> nu(int from, int to) const;
  /// Replaces nu_{from -> to}. Throws ContractError when (from, to) is not an
  /// edge or the payload has the wrong shape.
  void deliver(ConsensusEnvelope envelope);

  int iteration = 0;
  double residual = std::numeric_limits<double>::infinity();
  std::vector<std::vector<CategoricalMsg>> lastBelief;  // per AP, previous iteration's b'_x
  std::vector<Eigen::MatrixXcd> lastChannelMean;        // per AP, previous channel belief means

 private:
  int edgeIndex(int from, int to) const;

  ApGraph graph_;
  int entries_ = 0;
  std::vector<int> offset_;  // first directed-edge slot of each source node
  std::vector<std::vector<CategoricalMsg>> nu_;
};

/// nu_{from -> to} ∝ mu_from * prod_{n in N(from) \ to} nu_{n -> from}, per entry.
ConsensusEnvelope computeNu(int from, int to, std::span<const CategoricalMsg> localMu, const ConsensusState& state);

/// b'_x at AP l: p(x) * mu_l * prod_{n in N(l)} nu_{n -> l}.
std::vector<CategoricalMsg> decentralizedBelief(int ap, std::span<const CategoricalMsg> localMu,
                                                const ConsensusState& state, const CategoricalMsg& prior);

/// p(x) * prod_{n in N(l)} nu_{n -> l}: the belief with AP l's own message
/// left out (exact-mode symbol extrinsic).
std::vector<CategoricalMsg> neighborhoodProduct(int ap, const ConsensusState& state, const CategoricalMsg& prior);

enum class Schedule {
  sequential,  // APs sweep in index order and see nu updated earlier in the sweep
  parallel,    // every AP works from the previous iteration's nu
};

struct IterationOptions {
  Schedule schedule = Schedule::sequential;
  Exec exec = Exec::serial;  // only the parallel schedule and phase 1 fan out
};

/// One outer iteration: every AP refreshes b'_x, then the local sweeps and nu
/// exchange run in the chosen schedule. Returns the residual: max total
/// variation change of b'_x plus max relative change of the channel belief
/// means (infinite on the first call).
double runIteration(std::vector<ApWorkspace>& aps, ConsensusState& state, const EngineParams& params,
                    const IterationOptions& options, TraceSink* trace = nullptr);

struct RunOptions {
  IterationOptions iteration;
  int maxIterations = 20;
  double tolerance = 1e-6;
};

struct RunSummary {
  int iterations = 0;
  double residual = std::numeric_limits<double>::infinity();
  Diagnostics diag;
};

/// All APs of one realization plus their consensus state.
class DecentralizedEp {
 public:
  DecentralizedEp(std::vector<ApWorkspace> aps, ApGraph graph, EngineParams params);
  static DecentralizedEp fromRealization(const Realization& r, const ChannelModel& channels, const PilotBook& pilots,
                                         ApGraph graph, EngineParams params);

  double iterate(const IterationOptions& options, TraceSink* trace = nullptr);
  RunSummary run(const RunOptions& options, TraceSink* trace = nullptr);

  /// Per AP, N x K channel belief means.
  std::vector<Eigen::MatrixXcd> channelEstimates() const;
  /// b'_x at AP l from the current messages.
  std::vector<CategoricalMsg> symbolBeliefs(int ap) const;

  const std::vector<ApWorkspace>& workspaces() const { return aps_; }
  std::vector<ApWorkspace>& workspaces() { return aps_; }
  const ConsensusState& state() const { return state_; }
  const EngineParams& params() const { return params_; }

 private:
  std::vector<ApWorkspace> aps_;
  ConsensusState state_;
  EngineParams params_;
};

}  // namespace cfep
