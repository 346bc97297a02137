#include "cfep/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "cfep/trace.hpp"

namespace cfep {

namespace {

// Log-domain product of pmfs, renormalized with max subtraction.
CategoricalMsg logProduct(std::span<const CategoricalMsg* const> factors) {
  const int n = factors.front()->size();
  Pmf logw = Pmf::Zero(n);
  for (const CategoricalMsg* f : factors) {
    if (f->size() != n) throw ContractError("pmf product: size mismatch");
    for (int i = 0; i < n; ++i) logw[i] += std::log((*f)[i]);
  }
  return CategoricalMsg::fromLogWeights(logw);
}

double totalVariation(const CategoricalMsg& a, const CategoricalMsg& b) {
  return 0.5 * (a.pmf() - b.pmf()).cwiseAbs().sum();
}

}  // namespace

// ---------------------------------------------------------------------------
// ConsensusState

ConsensusState::ConsensusState(ApGraph graph, int numEntries, int numSymbols)
    : graph_(std::move(graph)), entries_(numEntries) {
  if (numEntries < 1) throw ContractError("ConsensusState: need at least one entry");
  int slots = 0;
  for (int l = 0; l < graph_.size(); ++l) {
    offset_.push_back(slots);
    slots += static_cast<int>(graph_.neighbors(l).size());
  }
  nu_.assign(static_cast<std::size_t>(slots),
             std::vector<CategoricalMsg>(static_cast<std::size_t>(numEntries), CategoricalMsg::uniform(numSymbols)));
}

int ConsensusState::edgeIndex(int from, int to) const {
  if (from < 0 || from >= graph_.size()) throw ContractError("consensus: AP index out of range");
  const auto& nbrs = graph_.neighbors(from);
  auto it = std::lower_bound(nbrs.begin(), nbrs.end(), to);
  if (it == nbrs.end() || *it != to) throw ContractError("consensus: (from, to) is not an edge of the AP graph");
  return offset_[static_cast<std::size_t>(from)] + static_cast<int>(it - nbrs.begin());
}

std::span<const CategoricalMsg> ConsensusState::nu(int from, int to) const {
  return nu_[static_cast<std::size_t>(edgeIndex(from, to))];
}

void ConsensusState::deliver(ConsensusEnvelope envelope) {
  const int e = edgeIndex(envelope.from, envelope.to);
  auto& slot = nu_[static_cast<std::size_t>(e)];
  if (static_cast<int>(envelope.payload.size()) != entries_) throw ContractError("consensus: payload size mismatch");
  if (envelope.payload.front().size() != slot.front().size())
    throw ContractError("consensus: payload constellation mismatch");
  slot = std::move(envelope.payload);
}

// ---------------------------------------------------------------------------
// message rules

ConsensusEnvelope computeNu(int from, int to, std::span<const CategoricalMsg> localMu, const ConsensusState& state) {
  if (static_cast<int>(localMu.size()) != state.numEntries()) throw ContractError("computeNu: local message count");
  if (!state.graph().hasEdge(from, to)) throw ContractError("computeNu: (from, to) is not an edge");
  std::vector<std::span<const CategoricalMsg>> inbound;
  for (int n : state.graph().neighbors(from))
    if (n != to) inbound.push_back(state.nu(n, from));

  ConsensusEnvelope env{from, to, state.iteration, {}};
  env.payload.reserve(localMu.size());
  std::vector<const CategoricalMsg*> factors;
  for (std::size_t e = 0; e < localMu.size(); ++e) {
    factors.assign(1, &localMu[e]);
    for (const auto& msgs : inbound) factors.push_back(&msgs[e]);
    env.payload.push_back(logProduct(factors));
  }
  return env;
}

std::vector<CategoricalMsg> decentralizedBelief(int ap, std::span<const CategoricalMsg> localMu,
                                                const ConsensusState& state, const CategoricalMsg& prior) {
  if (static_cast<int>(localMu.size()) != state.numEntries())
    throw ContractError("decentralizedBelief: local message count");
  std::vector<std::span<const CategoricalMsg>> inbound;
  for (int n : state.graph().neighbors(ap)) inbound.push_back(state.nu(n, ap));

  std::vector<CategoricalMsg> out;
  out.reserve(localMu.size());
  std::vector<const CategoricalMsg*> factors;
  for (std::size_t e = 0; e < localMu.size(); ++e) {
    factors.assign({&prior, &localMu[e]});
    for (const auto& msgs : inbound) factors.push_back(&msgs[e]);
    out.push_back(logProduct(factors));
  }
  return out;
}

std::vector<CategoricalMsg> neighborhoodProduct(int ap, const ConsensusState& state, const CategoricalMsg& prior) {
  std::vector<std::span<const CategoricalMsg>> inbound;
  for (int n : state.graph().neighbors(ap)) inbound.push_back(state.nu(n, ap));

  std::vector<CategoricalMsg> out;
  out.reserve(static_cast<std::size_t>(state.numEntries()));
  std::vector<const CategoricalMsg*> factors;
  for (int e = 0; e < state.numEntries(); ++e) {
    factors.assign(1, &prior);
    for (const auto& msgs : inbound) factors.push_back(&msgs[static_cast<std::size_t>(e)]);
    out.push_back(logProduct(factors));
  }
  return out;
}

// ---------------------------------------------------------------------------
// schedule

double runIteration(std::vector<ApWorkspace>& aps, ConsensusState& state, const EngineParams& params,
                    const IterationOptions& options, TraceSink* trace) {
  const int L = static_cast<int>(aps.size());
  if (L != state.graph().size()) throw ContractError("runIteration: AP count differs from the graph");
  const bool exact = params.mode == ExtrinsicMode::exact;
  const int iter = state.iteration;

  // Phase 1: every AP forms b'_x (and the leave-one-out product in exact mode)
  // from the nu of the previous iteration.
  std::vector<std::vector<CategoricalMsg>> leaveOneOut(static_cast<std::size_t>(L));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(L));
  forEachIndex(options.exec, L, [&](int l) {
    try {
      aps[l].beliefX = decentralizedBelief(l, aps[l].psi2ToX, state, params.prior);
      if (exact) leaveOneOut[l] = neighborhoodProduct(l, state, params.prior);
    } catch (...) {
      errors[l] = std::current_exception();
    }
  });
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  auto sendAll = [&](int l, const ConsensusState& from) {
    std::vector<ConsensusEnvelope> out;
    for (int n : state.graph().neighbors(l)) out.push_back(computeNu(l, n, aps[l].psi2ToX, from));
    return out;
  };
  auto traceEnvelopes = [&](const std::vector<ConsensusEnvelope>& envs) {
    if (!trace) return;
    for (const auto& env : envs)
      for (int e = 0; e < state.numEntries(); ++e)
        trace->envelope(iter, env.from, env.to, e / aps[env.from].numSlots, e % aps[env.from].numSlots,
                        env.payload[static_cast<std::size_t>(e)]);
  };

  if (options.schedule == Schedule::sequential) {
    for (int l = 0; l < L; ++l) {
      sweepAp(aps[l], params, leaveOneOut[l], iter, trace);
      auto envs = sendAll(l, state);
      traceEnvelopes(envs);
      for (auto& env : envs) state.deliver(std::move(env));
    }
  } else {
    // Sinks are not thread-safe; tracing is only honoured on the serial path.
    TraceSink* localTrace = options.exec == Exec::serial ? trace : nullptr;
    std::vector<std::vector<ConsensusEnvelope>> outbox(static_cast<std::size_t>(L));
    forEachIndex(options.exec, L, [&](int l) {
      try {
        sweepAp(aps[l], params, leaveOneOut[l], iter, localTrace);
        outbox[l] = sendAll(l, state);
      } catch (...) {
        errors[l] = std::current_exception();
      }
    });
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
    for (auto& envs : outbox) {
      if (localTrace) traceEnvelopes(envs);
      for (auto& env : envs) state.deliver(std::move(env));
    }
  }

  // Residual against the previous iteration.
  std::vector<Eigen::MatrixXcd> means;
  means.reserve(static_cast<std::size_t>(L));
  for (const auto& ws : aps) means.push_back(channelEstimate(ws));
  double residual = std::numeric_limits<double>::infinity();
  if (!state.lastBelief.empty()) {
    double tv = 0.0;
    double rel = 0.0;
    for (int l = 0; l < L; ++l) {
      for (std::size_t e = 0; e < aps[l].beliefX.size(); ++e)
        tv = std::max(tv, totalVariation(aps[l].beliefX[e], state.lastBelief[l][e]));
      for (Eigen::Index k = 0; k < means[l].cols(); ++k) {
        const double prev = state.lastChannelMean[l].col(k).norm();
        const double diff = (means[l].col(k) - state.lastChannelMean[l].col(k)).norm();
        rel = std::max(rel, prev > 0.0 ? diff / prev : (diff > 0.0 ? 1.0 : 0.0));
      }
    }
    residual = tv + rel;
  }
  state.lastBelief.clear();
  for (const auto& ws : aps) state.lastBelief.push_back(ws.beliefX);
  state.lastChannelMean = std::move(means);
  state.residual = residual;
  ++state.iteration;
  return residual;
}

// ---------------------------------------------------------------------------
// DecentralizedEp

DecentralizedEp::DecentralizedEp(std::vector<ApWorkspace> aps, ApGraph graph, EngineParams params)
    : aps_(std::move(aps)), params_(std::move(params)) {
  params_.validate();
  if (aps_.empty() || static_cast<int>(aps_.size()) != graph.size())
    throw ContractError("DecentralizedEp: one workspace per AP graph node required");
  if (!graph.connected()) throw ContractError("DecentralizedEp: AP graph must be connected");
  const int entries = aps_.front().numUsers * aps_.front().numSlots;
  state_ = ConsensusState(std::move(graph), entries, params_.constellation.size());
}

DecentralizedEp DecentralizedEp::fromRealization(const Realization& r, const ChannelModel& channels,
                                                 const PilotBook& pilots, ApGraph graph, EngineParams params) {
  params.validate();
  std::vector<ApWorkspace> aps;
  for (int l = 0; l < channels.numAps(); ++l) aps.push_back(makeWorkspace(l, r, channels, pilots, params));
  return DecentralizedEp(std::move(aps), std::move(graph), std::move(params));
}

double DecentralizedEp::iterate(const IterationOptions& options, TraceSink* trace) {
  return runIteration(aps_, state_, params_, options, trace);
}

RunSummary DecentralizedEp::run(const RunOptions& options, TraceSink* trace) {
  RunSummary summary;
  for (int i = 0; i < options.maxIterations; ++i) {
    summary.residual = iterate(options.iteration, trace);
    summary.iterations = i + 1;
    if (summary.residual < options.tolerance) break;
  }
  for (const auto& ws : aps_) summary.diag += ws.diag;
  return summary;
}

std::vector<Eigen::MatrixXcd> DecentralizedEp::channelEstimates() const {
  std::vector<Eigen::MatrixXcd> out;
  out.reserve(aps_.size());
  for (const auto& ws : aps_) out.push_back(channelEstimate(ws));
  return out;
}

std::vector<CategoricalMsg> DecentralizedEp::symbolBeliefs(int ap) const {
  return decentralizedBelief(ap, aps_[static_cast<std::size_t>(ap)].psi2ToX, state_, params_.prior);
}

}  // namespace cfep
