#include "cfep/ep_engine.hpp"

#include <cmath>
#include <optional>
#include <utility>

#include "cfep/trace.hpp"

namespace cfep {

namespace {

CMat noisePlusInterference(const InterferenceStats& z, double noiseVar) {
  CMat base = z.cov;
  base.diagonal().array() += noiseVar;
  return base;
}

// Posterior of h given x = s: precision |s|^2 A + diag(prec_h),
// information vector precMean_h + conj(s) A (y - m_z).
FullGaussian conditionalFromPrecision(const CMat& noiseInv, const CVec& whitened, const DiagGaussianMsg& ext, cd s) {
  CMat lambda = std::norm(s) * noiseInv;
  lambda.diagonal() += ext.prec().cast<cd>();
  const CVec eta = ext.precMean() + std::conj(s) * whitened;
  Eigen::LLT<CMat> llt(lambda);
  if (llt.info() != Eigen::Success) throw NumericError("conditional channel precision is not positive definite");
  const int n = static_cast<int>(eta.size());
  FullGaussian out;
  out.cov = llt.solve(CMat::Identity(n, n));
  out.cov = (0.5 * (out.cov + out.cov.adjoint())).eval();
  out.mean = llt.solve(eta);
  return out;
}

CategoricalMsg productOf(const CategoricalMsg& a, const CategoricalMsg& b) {
  if (a.size() != b.size()) throw ContractError("categorical product: size mismatch");
  Pmf logw(a.size());
  for (int i = 0; i < a.size(); ++i) logw[i] = std::log(a[i]) + std::log(b[i]);
  return CategoricalMsg::fromLogWeights(logw);
}

}  // namespace

void EngineParams::validate() const {
  constellation.validate();
  if (prior.size() != constellation.size()) throw ContractError("prior size does not match the constellation");
  if (!(noiseVar > 0.0) || !std::isfinite(noiseVar)) throw ContractError("noise variance must be positive");
  if (!(txPower > 0.0) || !std::isfinite(txPower)) throw ContractError("transmit power must be positive");
  if (pilotLength < 1) throw ContractError("pilot length must be >= 1");
  if (!(damping > 0.0 && damping <= 1.0)) throw ContractError("damping must lie in (0, 1]");
  if (!(precFloor > 0.0)) throw ContractError("precision floor must be positive");
  for (int s : genieSymbols)
    if (s < 0 || s >= constellation.size()) throw ContractError("genie symbol index out of range");
}

// ---------------------------------------------------------------------------
// stateless kernels

std::vector<CVec> preprocessPilots(const Eigen::MatrixXcd& pilotBlock, const PilotBook& pilots) {
  if (pilotBlock.cols() != pilots.length()) throw ContractError("preprocessPilots: pilot length mismatch");
  std::vector<CVec> out;
  out.reserve(static_cast<std::size_t>(pilots.numGroups()));
  for (int g = 0; g < pilots.numGroups(); ++g)
    out.emplace_back(pilotBlock * pilots.sequences.row(g).adjoint());
  return out;
}

InterferenceStats interferenceMoments(std::span<const SymbolMoments> symbols,
                                      std::span<const DiagGaussianMsg> channels, int exclude) {
  if (symbols.size() != channels.size() || channels.empty())
    throw ContractError("interferenceMoments: one symbol and one channel message per user");
  const int n = channels.front().dim();
  InterferenceStats z{CVec::Zero(n), CMat::Zero(n, n)};
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (static_cast<int>(i) == exclude) continue;
    const auto& h = channels[i];
    if (h.dim() != n) throw ContractError("interferenceMoments: dimension mismatch");
    if (!h.informative()) throw ContractError("interferenceMoments: interferer channel has infinite variance");
    const CVec mh = h.mean();
    const SymbolMoments& x = symbols[i];
    z.mean += x.mean * mh;
    for (int a = 0; a < n; ++a) z.cov(a, a) += x.second / h.prec()[a];
    z.cov += x.variance * (mh * mh.adjoint());
  }
  return z;
}

CategoricalMsg dataLikelihoodMessage(const CVec& y, const InterferenceStats& z, const DiagGaussianMsg& channelExt,
                                     double noiseVar, const Constellation& constellation, Diagnostics* diag) {
  if (!channelExt.informative()) throw ContractError("dataLikelihoodMessage: channel extrinsic must be informative");
  const CMat base = noisePlusInterference(z, noiseVar);
  const CVec mh = channelExt.mean();
  const RVec vh = channelExt.variance();
  const CVec resid = y - z.mean;

  // 4QAM and PSK share one |s|^2, so this usually holds a single factor.
  std::vector<std::pair<double, HermitianFactor>> factors;
  Pmf logw(constellation.size());
  for (int i = 0; i < constellation.size(); ++i) {
    const cd s = constellation.points[static_cast<std::size_t>(i)];
    const double power = std::norm(s);
    const HermitianFactor* f = nullptr;
    for (const auto& [p, cached] : factors)
      if (std::abs(p - power) <= 1e-12 * power) f = &cached;
    if (!f) {
      CMat cov = base;
      cov.diagonal() += (power * vh).cast<cd>();
      factors.emplace_back(power, HermitianFactor(cov, diag));
      f = &factors.back().second;
    }
    logw[i] = -f->quadForm(resid - s * mh) - f->logDet();
  }
  return CategoricalMsg::fromLogWeights(logw);
}

FullGaussian conditionalChannel(const CVec& y, const InterferenceStats& z, const DiagGaussianMsg& channelExt,
                                double noiseVar, cd s, Diagnostics* diag) {
  if (std::abs(s) == 0.0) throw ContractError("conditionalChannel: symbol must be nonzero");
  const HermitianFactor f(noisePlusInterference(z, noiseVar), diag);
  const CMat noiseInv = f.inverse();
  return conditionalFromPrecision(noiseInv, noiseInv * (y - z.mean), channelExt, s);
}

DiagGaussianMsg channelMessage(const CategoricalMsg& weights, const CVec& y, const InterferenceStats& z,
                               const DiagGaussianMsg& channelExt, double noiseVar,
                               const Constellation& constellation, double floor, Diagnostics* diag) {
  if (weights.size() != constellation.size()) throw ContractError("channelMessage: weight/constellation mismatch");
  const HermitianFactor f(noisePlusInterference(z, noiseVar), diag);
  const CMat noiseInv = f.inverse();
  const CVec whitened = noiseInv * (y - z.mean);
  const int n = channelExt.dim();
  std::vector<FullGaussian> comps(static_cast<std::size_t>(constellation.size()),
                                  FullGaussian{CVec::Zero(n), CMat::Zero(n, n)});
  for (int i = 0; i < constellation.size(); ++i)
    if (weights[i] > 0.0)
      comps[static_cast<std::size_t>(i)] =
          conditionalFromPrecision(noiseInv, whitened, channelExt, constellation.points[static_cast<std::size_t>(i)]);
  const DiagGaussianMsg projected = projectMixtureToDiagGaussian(weights, comps);
  return gaussianDivide(projected, channelExt, floor, diag);
}

DiagMoments hypotheticalPrior(const RVec& priorVar, const DiagGaussianMsg& extrinsic) {
  if (priorVar.size() != extrinsic.dim()) throw ContractError("hypotheticalPrior: dimension mismatch");
  DiagMoments q{CVec(priorVar.size()), RVec(priorVar.size())};
  for (int i = 0; i < priorVar.size(); ++i) {
    const double prec = 1.0 / priorVar[i] + extrinsic.prec()[i];
    q.var[i] = 1.0 / prec;
    q.mean[i] = extrinsic.precMean()[i] / prec;
  }
  return q;
}

DiagGaussianMsg pilotFactorMessage(const CVec& pilotObs, double pilotGain, double noiseVar, const RVec& priorVar,
                                   std::span<const DiagMoments> coUsers) {
  const int n = static_cast<int>(pilotObs.size());
  if (priorVar.size() != n) throw ContractError("pilotFactorMessage: dimension mismatch");
  if (!(pilotGain > 0.0)) throw ContractError("pilotFactorMessage: pilot gain must be positive");
  RVec resid = RVec::Constant(n, noiseVar / pilotGain);
  CVec target = pilotObs / pilotGain;
  for (const auto& q : coUsers) {
    if (q.var.size() != n) throw ContractError("pilotFactorMessage: co-user dimension mismatch");
    resid += q.var;
    target -= q.mean;
  }
  CVec mean(n);
  RVec var(n);
  for (int i = 0; i < n; ++i) {
    const double xi = priorVar[i];
    var[i] = 1.0 / (1.0 / xi + 1.0 / resid[i]);
    mean[i] = xi / (resid[i] + xi) * target[i];
  }
  return DiagGaussianMsg::fromMoments(mean, var);
}

DiagGaussianMsg dampMessage(const DiagGaussianMsg& fresh, const DiagGaussianMsg& old, double beta) {
  if (beta >= 1.0) return fresh;
  if (fresh.dim() != old.dim()) throw ContractError("dampMessage: dimension mismatch");
  return DiagGaussianMsg(beta * fresh.prec() + (1.0 - beta) * old.prec(),
                         beta * fresh.precMean() + (1.0 - beta) * old.precMean());
}

// ---------------------------------------------------------------------------
// workspace operations

ApWorkspace makeWorkspace(int ap, const Realization& r, const ChannelModel& channels, const PilotBook& pilots,
                          const EngineParams& params) {
  if (ap < 0 || ap >= static_cast<int>(r.Y.size())) throw ContractError("makeWorkspace: AP index out of range");
  ApWorkspace ws;
  ws.ap = ap;
  ws.numAntennas = static_cast<int>(r.Y[ap].rows());
  ws.numUsers = channels.numUsers();
  ws.numSlots = static_cast<int>(r.Y[ap].cols());
  ws.groupOf = pilots.groupOf;
  ws.groups = pilots.groups;
  ws.pilotObs = preprocessPilots(r.Yp[ap], pilots);
  for (int t = 0; t < ws.numSlots; ++t) ws.dataObs.emplace_back(r.Y[ap].col(t));
  for (int k = 0; k < ws.numUsers; ++k) ws.priorVar.push_back(RVec::Constant(ws.numAntennas, channels.variance(ap, k)));
  initializeMessages(ws, params);
  return ws;
}

void initializeMessages(ApWorkspace& ws, const EngineParams& params) {
  const int K = ws.numUsers;
  const int T = ws.numSlots;
  const int S = params.constellation.size();
  const bool genie = !params.genieSymbols.empty();
  if (genie && static_cast<int>(params.genieSymbols.size()) != K * T)
    throw ContractError("genie symbols must cover K*T entries");

  const auto silent = DiagGaussianMsg::nonInformative(ws.numAntennas);
  ws.psi2ToH.assign(static_cast<std::size_t>(K * T), silent);
  ws.hToPsi2.assign(static_cast<std::size_t>(K * T), silent);
  ws.hToPsi3.assign(static_cast<std::size_t>(K), silent);
  ws.psi2ToX.clear();
  for (int e = 0; e < K * T; ++e)
    ws.psi2ToX.push_back(genie ? CategoricalMsg::pointMass(S, params.genieSymbols[static_cast<std::size_t>(e)])
                               : CategoricalMsg::uniform(S));
  ws.xToPsi2.assign(static_cast<std::size_t>(K * T), params.prior);
  ws.beliefX.assign(static_cast<std::size_t>(K * T), params.prior);
  ws.interference.assign(static_cast<std::size_t>(K * T), InterferenceStats{});

  ws.psi3ToH.clear();
  for (int k = 0; k < K; ++k) ws.psi3ToH.push_back(messagePsi3ToH(ws, params, ws.groupOf[k], k));
  ws.diag = {};
}

const InterferenceStats& updateInterferenceStats(ApWorkspace& ws, const EngineParams& params, int k, int t) {
  std::vector<SymbolMoments> xs;
  std::vector<DiagGaussianMsg> hs;
  xs.reserve(static_cast<std::size_t>(ws.numUsers));
  hs.reserve(static_cast<std::size_t>(ws.numUsers));
  for (int i = 0; i < ws.numUsers; ++i) {
    xs.push_back(categoricalMoments(ws.xToPsi2[ws.idx(i, t)], params.constellation));
    hs.push_back(ws.hToPsi2[ws.idx(i, t)]);
  }
  auto& slot = ws.interference[ws.idx(k, t)];
  slot = interferenceMoments(xs, hs, k);
  return slot;
}

CategoricalMsg messagePsi2ToX(const ApWorkspace& ws, const EngineParams& params, int k, int t, Diagnostics* diag) {
  const int e = ws.idx(k, t);
  return dataLikelihoodMessage(ws.dataObs[t], ws.interference[e], ws.hToPsi2[e], params.noiseVar,
                               params.constellation, diag);
}

FullGaussian conditionalChannelStats(const ApWorkspace& ws, const EngineParams& params, int k, int t, cd s) {
  const int e = ws.idx(k, t);
  return conditionalChannel(ws.dataObs[t], ws.interference[e], ws.hToPsi2[e], params.noiseVar, s);
}

DiagGaussianMsg messagePsi2ToH(const ApWorkspace& ws, const EngineParams& params, int k, int t, Diagnostics* diag) {
  const int e = ws.idx(k, t);
  const CategoricalMsg weights = productOf(ws.psi2ToX[e], ws.xToPsi2[e]);
  return channelMessage(weights, ws.dataObs[t], ws.interference[e], ws.hToPsi2[e], params.noiseVar,
                        params.constellation, params.precFloor, diag);
}

DiagGaussianMsg extrinsicToPsi3(const ApWorkspace& ws, int k) {
  DiagGaussianMsg acc = ws.psi2ToH[ws.idx(k, 0)];
  for (int t = 1; t < ws.numSlots; ++t) acc = gaussianProduct(acc, ws.psi2ToH[ws.idx(k, t)]);
  return acc;
}

DiagGaussianMsg messagePsi3ToH(const ApWorkspace& ws, const EngineParams& params, int g, int k) {
  if (g < 0 || g >= ws.numGroups() || ws.groupOf[k] != g) throw ContractError("messagePsi3ToH: user not in group");
  std::vector<DiagMoments> others;
  for (int other : ws.groups[g])
    if (other != k) others.push_back(hypotheticalPrior(ws.priorVar[other], ws.hToPsi3[other]));
  return pilotFactorMessage(ws.pilotObs[g], params.txPower * params.pilotLength, params.noiseVar, ws.priorVar[k],
                            others);
}

void updateExtrinsics(ApWorkspace& ws, const EngineParams& params, std::span<const CategoricalMsg> leaveOneOutX) {
  const int K = ws.numUsers;
  const int T = ws.numSlots;
  if (params.mode == ExtrinsicMode::simplified) {
    const auto beliefs = channelBelief(ws);
    for (int k = 0; k < K; ++k)
      for (int t = 0; t < T; ++t) ws.hToPsi2[ws.idx(k, t)] = beliefs[static_cast<std::size_t>(k)];
    ws.xToPsi2 = ws.beliefX;
    return;
  }
  for (int k = 0; k < K; ++k)
    for (int t = 0; t < T; ++t) {
      DiagGaussianMsg acc = ws.psi3ToH[k];
      for (int u = 0; u < T; ++u)
        if (u != t) acc = gaussianProduct(acc, ws.psi2ToH[ws.idx(k, u)]);
      ws.hToPsi2[ws.idx(k, t)] = std::move(acc);
    }
  if (static_cast<int>(leaveOneOutX.size()) != K * T)
    throw ContractError("updateExtrinsics: exact mode needs K*T leave-one-out symbol messages");
  ws.xToPsi2.assign(leaveOneOutX.begin(), leaveOneOutX.end());
}

std::vector<DiagGaussianMsg> channelBelief(const ApWorkspace& ws) {
  std::vector<DiagGaussianMsg> out;
  out.reserve(static_cast<std::size_t>(ws.numUsers));
  for (int k = 0; k < ws.numUsers; ++k) {
    DiagGaussianMsg acc = ws.psi3ToH[k];
    for (int t = 0; t < ws.numSlots; ++t) acc = gaussianProduct(acc, ws.psi2ToH[ws.idx(k, t)]);
    out.push_back(std::move(acc));
  }
  return out;
}

Eigen::MatrixXcd channelEstimate(const ApWorkspace& ws) {
  Eigen::MatrixXcd est(ws.numAntennas, ws.numUsers);
  const auto beliefs = channelBelief(ws);
  for (int k = 0; k < ws.numUsers; ++k) est.col(k) = beliefs[static_cast<std::size_t>(k)].mean();
  return est;
}

void sweepAp(ApWorkspace& ws, const EngineParams& params, std::span<const CategoricalMsg> leaveOneOutX, int iteration,
             TraceSink* trace) {
  const int K = ws.numUsers;
  const int T = ws.numSlots;
  const bool genie = !params.genieSymbols.empty();
  const int S = params.constellation.size();

  for (int k = 0; k < K; ++k) ws.hToPsi3[k] = extrinsicToPsi3(ws, k);
  updateExtrinsics(ws, params, leaveOneOutX);

  std::vector<DiagGaussianMsg> pilotMsgs;
  pilotMsgs.reserve(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) pilotMsgs.push_back(messagePsi3ToH(ws, params, ws.groupOf[k], k));
  for (int k = 0; k < K; ++k) {
    ws.psi3ToH[k] = dampMessage(pilotMsgs[static_cast<std::size_t>(k)], ws.psi3ToH[k], params.damping);
    if (trace) trace->gaussian(iteration, ws.ap, k, -1, "psi3_to_h", ws.psi3ToH[k]);
  }

  for (int k = 0; k < K; ++k)
    for (int t = 0; t < T; ++t) {
      const int e = ws.idx(k, t);
      updateInterferenceStats(ws, params, k, t);
      ws.psi2ToX[e] = genie ? CategoricalMsg::pointMass(S, params.genieSymbols[static_cast<std::size_t>(e)])
                            : messagePsi2ToX(ws, params, k, t, &ws.diag);
      if (trace) trace->categorical(iteration, ws.ap, k, t, "psi2_to_x", ws.psi2ToX[e]);
    }

  for (int k = 0; k < K; ++k)
    for (int t = 0; t < T; ++t) {
      const int e = ws.idx(k, t);
      ws.psi2ToH[e] = dampMessage(messagePsi2ToH(ws, params, k, t, &ws.diag), ws.psi2ToH[e], params.damping);
      if (trace) trace->gaussian(iteration, ws.ap, k, t, "psi2_to_h", ws.psi2ToH[e]);
    }
}

}  // namespace cfep
