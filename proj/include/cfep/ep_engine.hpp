#pragma once

#include <span>
#include <vector>

#include "cfep/gaussian.hpp"
#include "cfep/scenario.hpp"
#include "cfep/types.hpp"

namespace cfep {

class TraceSink;

enum class ExtrinsicMode {
  exact,       // leave-one-out products
  simplified,  // full variable beliefs stand in for the extrinsics
};

struct EngineParams {
  Constellation constellation;  // already scaled to amplitude sigma_x
  CategoricalMsg prior;         // p(x) over the constellation
  double noiseVar = 1.0;        // sigma_v^2
  double txPower = 1.0;         // sigma_x^2
  int pilotLength = 1;          // P
  ExtrinsicMode mode = ExtrinsicMode::simplified;
  double damping = 1.0;     // beta in (0, 1], applied to Psi2->h and Psi3->h
  double precFloor = 1e-8;  // see gaussianDivide
  /// K*T true symbol indices (row-major k*T + t). Non-empty switches on the
  /// genie-aided variant: Psi2->x messages are pinned to point masses.
  std::vector<int> genieSymbols;

  void validate() const;
};

/// Moments of the CLT interference sum z = sum_{i != k} x_i h_i.
struct InterferenceStats {
  CVec mean;
  CMat cov;
};

/// Mean/variance of a diagonal Gaussian in moment form.
struct DiagMoments {
  CVec mean;
  RVec var;
};

/// One AP's message store. Per-(k,t) stores are indexed k*T + t.
struct ApWorkspace {
  int ap = 0;
  int numAntennas = 0;
  int numUsers = 0;
  int numSlots = 0;
  std::vector<int> groupOf;
  std::vector<std::vector<int>> groups;
  std::vector<CVec> pilotObs;  // y_{p,lg}, one per group
  std::vector<CVec> dataObs;   // y_{lt}
  std::vector<RVec> priorVar;  // diag(Xi_{h_lk})

  // factor -> variable
  std::vector<DiagGaussianMsg> psi2ToH;  // K*T
  std::vector<DiagGaussianMsg> psi3ToH;  // K
  std::vector<CategoricalMsg> psi2ToX;   // K*T
  // variable -> factor
  std::vector<DiagGaussianMsg> hToPsi3;  // K
  std::vector<DiagGaussianMsg> hToPsi2;  // K*T
  std::vector<CategoricalMsg> xToPsi2;   // K*T
  // consensus belief b'_{x_kt} as seen by this AP
  std::vector<CategoricalMsg> beliefX;  // K*T
  std::vector<InterferenceStats> interference;  // K*T cache

  Diagnostics diag;

  int idx(int k, int t) const { return k * numSlots + t; }
  int numGroups() const { return static_cast<int>(groups.size()); }
};

// -- stateless kernels --------------------------------------------------------

/// y_{p,lg} = Y_{p,l} x_{p,g}^*, one vector per pilot group.
std::vector<CVec> preprocessPilots(const Eigen::MatrixXcd& pilotBlock, const PilotBook& pilots);

/// Exact first and second moments of sum_{i != exclude} x_i h_i for
/// independent x_i ~ symbols[i] and h_i ~ channels[i].
InterferenceStats interferenceMoments(std::span<const SymbolMoments> symbols,
                                      std::span<const DiagGaussianMsg> channels, int exclude);

/// pmf(s) ∝ CN(y | m_z + s m_h, sigma_v^2 I + C_z + |s|^2 C_h). One
/// factorization per distinct |s|^2.
CategoricalMsg dataLikelihoodMessage(const CVec& y, const InterferenceStats& z, const DiagGaussianMsg& channelExt,
                                     double noiseVar, const Constellation& constellation,
                                     Diagnostics* diag = nullptr);

/// Posterior of h given x = s under the Gaussian interference model.
FullGaussian conditionalChannel(const CVec& y, const InterferenceStats& z, const DiagGaussianMsg& channelExt,
                                double noiseVar, cd s, Diagnostics* diag = nullptr);

/// proj(E_w[CN(h | m(s), C(s))]) / channelExt.
DiagGaussianMsg channelMessage(const CategoricalMsg& weights, const CVec& y, const InterferenceStats& z,
                               const DiagGaussianMsg& channelExt, double noiseVar,
                               const Constellation& constellation, double floor, Diagnostics* diag = nullptr);

/// q(h) ∝ CN(0, diag(priorVar)) * extrinsic.
DiagMoments hypotheticalPrior(const RVec& priorVar, const DiagGaussianMsg& extrinsic);

/// Pilot-factor message for one user given the hypothetical priors of its
/// co-pilot users. pilotGain = sigma_x^2 P.
DiagGaussianMsg pilotFactorMessage(const CVec& pilotObs, double pilotGain, double noiseVar, const RVec& priorVar,
                                   std::span<const DiagMoments> coUsers);

DiagGaussianMsg dampMessage(const DiagGaussianMsg& fresh, const DiagGaussianMsg& old, double beta);

// -- workspace operations -----------------------------------------------------

/// Preprocesses AP l's observations and initializes its messages.
ApWorkspace makeWorkspace(int ap, const Realization& r, const ChannelModel& channels, const PilotBook& pilots,
                          const EngineParams& params);

/// Psi2->x uniform (or genie point masses), Psi2->h non-informative,
/// Psi3->h = pilot-only LMMSE with the prior as every co-user's q.
void initializeMessages(ApWorkspace& ws, const EngineParams& params);

const InterferenceStats& updateInterferenceStats(ApWorkspace& ws, const EngineParams& params, int k, int t);
CategoricalMsg messagePsi2ToX(const ApWorkspace& ws, const EngineParams& params, int k, int t,
                              Diagnostics* diag = nullptr);
FullGaussian conditionalChannelStats(const ApWorkspace& ws, const EngineParams& params, int k, int t, cd s);
DiagGaussianMsg messagePsi2ToH(const ApWorkspace& ws, const EngineParams& params, int k, int t,
                               Diagnostics* diag = nullptr);
DiagGaussianMsg extrinsicToPsi3(const ApWorkspace& ws, int k);
DiagGaussianMsg messagePsi3ToH(const ApWorkspace& ws, const EngineParams& params, int g, int k);

/// Refreshes hToPsi2 and xToPsi2. Simplified mode copies the beliefs (b_h and
/// ws.beliefX); exact mode takes leave-one-out products, with the x part
/// supplied by the caller (K*T pmfs, p(x) times every other AP's message).
void updateExtrinsics(ApWorkspace& ws, const EngineParams& params, std::span<const CategoricalMsg> leaveOneOutX);

/// b_{h_lk} = Psi3->h times every Psi2->h, one per user.
std::vector<DiagGaussianMsg> channelBelief(const ApWorkspace& ws);
/// N x K matrix of belief means.
Eigen::MatrixXcd channelEstimate(const ApWorkspace& ws);

/// One AP's local sweep: Psi3 extrinsic, extrinsic refresh, Psi3->h, Psi2->x,
/// Psi2->h. The consensus exchange happens outside.
void sweepAp(ApWorkspace& ws, const EngineParams& params, std::span<const CategoricalMsg> leaveOneOutX,
             int iteration = 0, TraceSink* trace = nullptr);

}  // namespace cfep
