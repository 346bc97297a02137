#include <cmath>

#include "cfep/consensus.hpp"
#include "cfep/ep_engine.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"

using namespace cfep;
using namespace cfep::testing;

namespace {

DiagGaussianMsg diagMsg(const CVec& mean, const RVec& var) { return DiagGaussianMsg::fromMoments(mean, var); }

CVec vec1(cd v) { return CVec::Constant(1, v); }
RVec rvec1(double v) { return RVec::Constant(1, v); }

InterferenceStats noInterference(int n) { return {CVec::Zero(n), CMat::Zero(n, n)}; }

struct Toy {
  ChannelModel channels;
  PilotBook pilots;
  Realization real;
  EngineParams params;
};

Toy makeToy(int K, int P, int T, int N, double noiseVar, std::uint64_t seed, int L = 1) {
  Toy toy;
  toy.channels.perLinkVariance = Eigen::MatrixXd::Constant(L, K, 1.0);
  toy.channels.numAntennas = N;
  toy.pilots = assignPilots(K, P, 1.0);
  toy.real = drawRealization(toy.channels, toy.pilots, T, Constellation::qam4(), CategoricalMsg::uniform(4), noiseVar,
                             seed);
  toy.params.constellation = Constellation::qam4();
  toy.params.prior = CategoricalMsg::uniform(4);
  toy.params.noiseVar = noiseVar;
  toy.params.txPower = 1.0;
  toy.params.pilotLength = P;
  return toy;
}

}  // namespace

TEST_CASE("pilot preprocessing") {
  auto book = assignPilots(3, 2, 0.5);
  Eigen::MatrixXcd H(2, 3);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 3; ++k) H(i, k) = randComplex(rng);
  const Eigen::MatrixXcd Yp = H * book.pilotMatrix();
  const auto obs = preprocessPilots(Yp, book);
  REQUIRE(obs.size() == 2);
  // group 0 holds users 0 and 2, group 1 holds user 1
  CHECK((obs[0] - 2 * 0.5 * (H.col(0) + H.col(2))).norm() < 1e-13);
  CHECK((obs[1] - 2 * 0.5 * H.col(1)).norm() < 1e-13);

  Eigen::MatrixXcd noisy = Yp;
  for (int i = 0; i < 2; ++i)
    for (int p = 0; p < 2; ++p) noisy(i, p) += randComplex(rng);
  const auto n = preprocessPilots(noisy, book);
  for (int g = 0; g < 2; ++g) {
    Eigen::VectorXcd direct = Eigen::VectorXcd::Zero(2);
    for (int i = 0; i < 2; ++i)
      for (int p = 0; p < 2; ++p) direct[i] += noisy(i, p) * std::conj(book.sequences(g, p));
    CHECK((n[g] - direct).norm() < 1e-13);
  }
  CHECK_THROWS_AS(preprocessPilots(Eigen::MatrixXcd::Zero(2, 3), book), ContractError);
}

TEST_CASE("interference moments") {
  const auto c = Constellation::qam4();
  SUBCASE("no interferers") {
    std::vector<SymbolMoments> xs{categoricalMoments(CategoricalMsg::uniform(4), c)};
    std::vector<DiagGaussianMsg> hs{diagMsg(CVec::Ones(2), RVec::Ones(2))};
    auto z = interferenceMoments(xs, hs, 0);
    CHECK(z.mean.norm() == 0.0);
    CHECK(z.cov.norm() == 0.0);
  }
  SUBCASE("deterministic interferer") {
    std::vector<SymbolMoments> xs{categoricalMoments(CategoricalMsg::uniform(4), c),
                                  categoricalMoments(CategoricalMsg::pointMass(4, 2), c)};
    CVec m(2);
    m << cd(0.5, 1), cd(-2, 0.25);
    std::vector<DiagGaussianMsg> hs{diagMsg(CVec::Zero(2), RVec::Ones(2)), diagMsg(m, RVec::Constant(2, 1e-300))};
    auto z = interferenceMoments(xs, hs, 0);
    CHECK((z.mean - c.points[2] * m).norm() < 1e-15);
    CHECK(z.cov.norm() < 1e-12);
  }
  SUBCASE("enumeration") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 50; ++trial) {
      const int K = 3;
      const int n = 2;
      std::vector<Pmf> pmfs;
      std::vector<SymbolMoments> xs;
      std::vector<DiagGaussianMsg> hs;
      std::vector<Eigen::VectorXcd> hm;
      std::vector<Eigen::VectorXd> hv;
      for (int i = 0; i < K; ++i) {
        pmfs.push_back(randPmf(rng, 4));
        xs.push_back(categoricalMoments(CategoricalMsg(pmfs.back()), c));
        const CVec m = randCVec(rng, n);
        const RVec v = randPositive(rng, n);
        hs.push_back(diagMsg(m, v));
        hm.emplace_back(m);
        hv.emplace_back(v);
      }
      const int exclude = trial % K;
      const auto z = interferenceMoments(xs, hs, exclude);
      const auto ref = oracle::enumerateInterference(pmfs, c, hm, hv, exclude);
      CHECK((z.mean - ref.mean).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((Eigen::MatrixXcd(z.cov) - ref.cov).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("symbol likelihood message") {
  const auto c = Constellation::qam4();
  SUBCASE("scalar density") {
    // total variance 0.5 + |s|^2 * 0.5 = 1 for every 4QAM point
    auto msg = dataLikelihoodMessage(vec1(1.0), noInterference(1), diagMsg(vec1(1.0), rvec1(0.5)), 0.5, c);
    Pmf ref(4);
    for (int i = 0; i < 4; ++i) ref[i] = std::exp(-std::norm(1.0 - c.points[i]));
    ref /= ref.sum();
    CHECK((msg.pmf() - ref).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("large noise flattens") {
    auto msg = dataLikelihoodMessage(vec1(1.0), noInterference(1), diagMsg(vec1(1.0), rvec1(0.1)), 1e8, c);
    CHECK((msg.pmf().array() - 0.25).abs().maxCoeff() < 1e-6);
  }
  SUBCASE("exact match") {
    CVec mh(2);
    mh << cd(1, 0.5), cd(-0.3, 2);
    const CVec y = c.points[3] * mh;
    auto msg = dataLikelihoodMessage(y, noInterference(2), diagMsg(mh, RVec::Constant(2, 1e-14)), 1e-12, c);
    CHECK(msg[3] > 1.0 - 1e-12);
  }
  SUBCASE("per-point evaluation with unequal |s|") {
    const auto q16 = Constellation::qam16();
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
      const CVec y = randCVec(rng, 2);
      InterferenceStats z{randCVec(rng, 2, 0.3), CMat(randHpd(rng, 2, 0.1) * 0.2)};
      const auto ext = diagMsg(randCVec(rng, 2), randPositive(rng, 2, 0.1, 0.5));
      const double noise = 0.3;
      auto msg = dataLikelihoodMessage(y, z, ext, noise, q16);
      Pmf logw(16);
      for (int i = 0; i < 16; ++i) {
        const cd s = q16.points[i];
        CMat cov = z.cov;
        cov.diagonal().array() += noise;
        cov.diagonal() += (std::norm(s) * ext.variance()).cast<cd>();
        logw[i] = gaussianLogPdf(y, z.mean + s * ext.mean(), cov);
      }
      const auto ref = CategoricalMsg::fromLogWeights(logw);
      CHECK((msg.pmf() - ref.pmf()).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("scale equivariance") {
    std::mt19937_64 rng(6);
    const CVec y = randCVec(rng, 2);
    InterferenceStats z{randCVec(rng, 2, 0.3), CMat(randHpd(rng, 2, 0.1) * 0.2)};
    const CVec mh = randCVec(rng, 2);
    const RVec vh = randPositive(rng, 2, 0.1, 0.5);
    const double gamma = 1e-4;
    auto a = dataLikelihoodMessage(y, z, diagMsg(mh, vh), 0.4, c);
    InterferenceStats zs{gamma * z.mean, gamma * gamma * z.cov};
    auto b = dataLikelihoodMessage(gamma * y, zs, diagMsg(gamma * mh, gamma * gamma * vh), gamma * gamma * 0.4, c);
    CHECK((a.pmf() - b.pmf()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("conditional channel statistics") {
  SUBCASE("matched filter limit") {
    const cd s(0.6, -0.8);
    auto post = conditionalChannel(vec1(cd(0.3, 0.1)), noInterference(1),
                                   DiagGaussianMsg(rvec1(1e-14), CVec::Zero(1)), 0.2, s);
    CHECK(std::abs(post.mean[0] - cd(0.3, 0.1) / s) < 1e-10);
    CHECK(post.cov(0, 0).real() == doctest::Approx(0.2 / std::norm(s)));
  }
  SUBCASE("prior dominated") {
    const cd s(1e-7, 0);
    auto post = conditionalChannel(vec1(5.0), noInterference(1), diagMsg(vec1(2.0), rvec1(0.5)), 1.0, s);
    const cd scalar = 2.0 + std::conj(s) * 0.5 * (5.0 - s * 2.0) / (std::norm(s) * 0.5 + 1.0);
    CHECK(std::abs(post.mean[0] - scalar) < 1e-15);
    CHECK(std::abs(post.mean[0] - 2.0) < 1e-6);
    CHECK(post.cov(0, 0).real() == doctest::Approx(0.5));
  }
  SUBCASE("joint conditioning oracle") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 100; ++trial) {
      const CVec y = randCVec(rng, 2);
      InterferenceStats z{randCVec(rng, 2, 0.5), CMat(randHpd(rng, 2, 0.2) * 0.3)};
      const CVec mh = randCVec(rng, 2);
      const RVec vh = randPositive(rng, 2);
      const cd s = randComplex(rng) + 0.2;
      const double noise = randUniform(rng, 0.1, 1.0);
      auto post = conditionalChannel(y, z, diagMsg(mh, vh), noise, s);
      const Eigen::MatrixXcd hc = vh.cast<cd>().asDiagonal();
      const auto ref = oracle::jointConditioning(y, z.mean, z.cov, noise, mh, hc, s);
      CHECK((post.mean - ref.mean).cwiseAbs().maxCoeff() < 1e-10);
      CHECK((Eigen::MatrixXcd(post.cov) - ref.cov).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
  CHECK_THROWS_AS(conditionalChannel(vec1(1.0), noInterference(1), diagMsg(vec1(0), rvec1(1)), 1.0, 0.0),
                  ContractError);
}

TEST_CASE("channel message") {
  const auto c = Constellation::qam4();
  SUBCASE("point mass with diffuse extrinsic") {
    const CVec y = CVec::Constant(2, cd(0.4, -0.2));
    const auto ext = DiagGaussianMsg(RVec::Constant(2, 1e-12), CVec::Zero(2));
    auto msg = channelMessage(CategoricalMsg::pointMass(4, 1), y, noInterference(2), ext, 0.3, c, 1e-14);
    const cd s = c.points[1];
    CHECK((msg.mean() - y / s).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((msg.variance().array() - 0.3 / std::norm(s)).abs().maxCoeff() < 1e-8);
  }
  SUBCASE("symmetric observation") {
    auto msg = channelMessage(CategoricalMsg::uniform(4), CVec::Zero(2), noInterference(2),
                              diagMsg(CVec::Constant(2, 0.0), RVec::Ones(2)), 0.5, c, 1e-8);
    CHECK(msg.mean().norm() < 1e-14);
  }
  SUBCASE("composition oracle") {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 50; ++trial) {
      const CVec y = randCVec(rng, 2);
      InterferenceStats z{randCVec(rng, 2, 0.3), CMat(randHpd(rng, 2, 0.2) * 0.2)};
      const CVec mh = randCVec(rng, 2);
      const RVec vh = randPositive(rng, 2, 0.5, 2.0);
      const Pmf w = randPmf(rng, 4);
      const double noise = 0.4;
      Diagnostics diag;
      auto msg = channelMessage(CategoricalMsg(w), y, z, diagMsg(mh, vh), noise, c, 1e-12, &diag);
      std::vector<Eigen::VectorXcd> means;
      std::vector<Eigen::MatrixXcd> covs;
      const Eigen::MatrixXcd hc = vh.cast<cd>().asDiagonal();
      for (int i = 0; i < 4; ++i) {
        auto r = oracle::jointConditioning(y, z.mean, z.cov, noise, mh, hc, c.points[i]);
        means.push_back(r.mean);
        covs.push_back(r.cov);
      }
      const auto mix = oracle::mixtureMoments(w, means, covs);
      for (int a = 0; a < 2; ++a) {
        const double projPrec = 1.0 / mix.cov(a, a).real();
        const double prec = projPrec - 1.0 / vh[a];
        if (prec < 1e-12) continue;  // clamp path is covered elsewhere
        const cd mean = (projPrec * mix.mean[a] - mh[a] / vh[a]) / prec;
        CHECK(msg.prec()[a] == doctest::Approx(prec).epsilon(1e-9));
        CHECK(std::abs(msg.mean()[a] - mean) < 1e-8 * (1.0 + std::abs(mean)));
      }
    }
  }
}

TEST_CASE("psi3 extrinsic") {
  Toy toy = makeToy(2, 2, 1, 2, 0.1, 3);
  auto ws = makeWorkspace(0, toy.real, toy.channels, toy.pilots, toy.params);
  const auto m = diagMsg(CVec::Constant(2, cd(1, 1)), RVec::Constant(2, 0.5));
  ws.psi2ToH[ws.idx(0, 0)] = m;
  auto one = extrinsicToPsi3(ws, 0);
  CHECK((one.mean() - m.mean()).norm() < 1e-15);

  Toy many = makeToy(2, 2, 5, 2, 0.1, 3);
  auto ws5 = makeWorkspace(0, many.real, many.channels, many.pilots, many.params);
  for (int t = 0; t < 5; ++t) ws5.psi2ToH[ws5.idx(1, t)] = m;
  auto five = extrinsicToPsi3(ws5, 1);
  CHECK((five.variance().array() - 0.1).abs().maxCoeff() < 1e-14);
  CHECK((five.mean() - m.mean()).norm() < 1e-14);

  std::mt19937_64 rng(2);
  cd num = 0;
  double prec = 0;
  for (int t = 0; t < 5; ++t) {
    const double v = randUniform(rng, 0.2, 2.0);
    const cd mu = randComplex(rng);
    ws5.psi2ToH[ws5.idx(0, t)] = diagMsg(CVec::Constant(2, mu), RVec::Constant(2, v));
    num += mu / v;
    prec += 1.0 / v;
  }
  auto mixed = extrinsicToPsi3(ws5, 0);
  CHECK(std::abs(mixed.mean()[0] - num / prec) < 1e-14);
}

TEST_CASE("pilot factor message") {
  // Xi = 1, noise/gain = 1, obs/gain = 2
  auto m = pilotFactorMessage(vec1(4.0), 2.0, 2.0, rvec1(1.0), {});
  CHECK(std::abs(m.mean()[0] - 1.0) < 1e-15);
  CHECK(m.variance()[0] == doctest::Approx(0.5));

  auto tiny = pilotFactorMessage(vec1(4.0), 2.0, 2.0, rvec1(1e-12), {});
  CHECK(std::abs(tiny.mean()[0]) < 1e-11);
  CHECK(tiny.variance()[0] < 1e-11);

  // co-user known exactly: cancel it and fall back to the singleton rule
  const cd h2(0.7, -0.3);
  std::vector<DiagMoments> known{{vec1(h2), rvec1(0.0)}};
  auto two = pilotFactorMessage(vec1(4.0), 2.0, 2.0, rvec1(1.0), known);
  auto single = oracle::wiener(2.0 - h2, 1.0, 1.0);
  CHECK(std::abs(two.mean()[0] - single.mean) < 1e-15);
  CHECK(two.variance()[0] == doctest::Approx(single.var));

  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const CVec obs = randCVec(rng, 2, 3.0);
    const RVec xi = randPositive(rng, 2);
    const double gain = randUniform(rng, 0.5, 6.0);
    const double noise = randUniform(rng, 0.1, 2.0);
    auto msg = pilotFactorMessage(obs, gain, noise, xi, {});
    for (int a = 0; a < 2; ++a) {
      auto ref = oracle::wiener(obs[a] / gain, xi[a], noise / gain);
      CHECK(std::abs(msg.mean()[a] - ref.mean) < 1e-12);
      CHECK(std::abs(msg.variance()[a] - ref.var) < 1e-12);
    }
  }
}

TEST_CASE("hypothetical prior") {
  auto q = hypotheticalPrior(RVec::Constant(1, 1.0), diagMsg(vec1(2.0), rvec1(1.0)));
  CHECK(std::abs(q.mean[0] - 1.0) < 1e-15);
  CHECK(q.var[0] == doctest::Approx(0.5));
  auto flat = hypotheticalPrior(RVec::Constant(1, 3.0), DiagGaussianMsg::nonInformative(1));
  CHECK(std::abs(flat.mean[0]) == 0.0);
  CHECK(flat.var[0] == doctest::Approx(3.0));
}

TEST_CASE("initial state is the pilot-only estimate") {
  Toy toy = makeToy(3, 3, 4, 2, 0.05, 12);
  auto ws = makeWorkspace(0, toy.real, toy.channels, toy.pilots, toy.params);
  const auto est = channelEstimate(ws);
  for (int k = 0; k < 3; ++k) {
    const int g = ws.groupOf[k];
    for (int a = 0; a < 2; ++a) {
      auto ref = oracle::wiener(ws.pilotObs[g][a] / 3.0, 1.0, 0.05 / 3.0);
      CHECK(std::abs(est(a, k) - ref.mean) < 1e-12);
    }
  }
  for (const auto& m : ws.psi2ToX) CHECK((m.pmf().array() - 0.25).abs().maxCoeff() == 0.0);
  for (const auto& m : ws.psi2ToH) CHECK(m.prec().norm() == 0.0);
}

TEST_CASE("extrinsic modes") {
  SUBCASE("one slot leaves only the pilot message") {
    Toy toy = makeToy(2, 2, 1, 2, 0.1, 5);
    toy.params.mode = ExtrinsicMode::exact;
    auto ws = makeWorkspace(0, toy.real, toy.channels, toy.pilots, toy.params);
    ws.psi2ToH[0] = diagMsg(CVec::Ones(2), RVec::Ones(2));
    std::vector<CategoricalMsg> loo(2, toy.params.prior);
    updateExtrinsics(ws, toy.params, loo);
    CHECK((ws.hToPsi2[0].prec() - ws.psi3ToH[0].prec()).norm() == 0.0);
    CHECK((ws.hToPsi2[0].precMean() - ws.psi3ToH[0].precMean()).norm() == 0.0);
  }
  SUBCASE("leave-one-out gap is of order 1/T") {
    const int T = 100;
    Toy toy = makeToy(1, 1, T, 1, 0.1, 5);
    std::mt19937_64 rng(3);
    auto ws = makeWorkspace(0, toy.real, toy.channels, toy.pilots, toy.params);
    for (int t = 0; t < T; ++t) ws.psi2ToH[t] = diagMsg(vec1(1.0 + randComplex(rng, 0.5)), rvec1(1.0));
    auto simple = ws;
    toy.params.mode = ExtrinsicMode::simplified;
    updateExtrinsics(simple, toy.params, {});
    toy.params.mode = ExtrinsicMode::exact;
    std::vector<CategoricalMsg> loo(T, toy.params.prior);
    updateExtrinsics(ws, toy.params, loo);
    double worst = 0.0;
    for (int t = 0; t < T; ++t) {
      const cd a = simple.hToPsi2[t].mean()[0];
      const cd b = ws.hToPsi2[t].mean()[0];
      worst = std::max(worst, std::abs(a - b) / std::abs(a));
    }
    CHECK(worst > 0.0);
    CHECK(worst < 3.0 / T);
  }
  SUBCASE("single AP belief is prior times local message") {
    Toy toy = makeToy(2, 2, 3, 2, 0.1, 7);
    auto ws = makeWorkspace(0, toy.real, toy.channels, toy.pilots, toy.params);
    std::mt19937_64 rng(1);
    for (auto& m : ws.psi2ToX) m = CategoricalMsg(randPmf(rng, 4));
    ConsensusState state(ApGraph(1), 6, 4);
    auto b = decentralizedBelief(0, ws.psi2ToX, state, toy.params.prior);
    for (int e = 0; e < 6; ++e) CHECK((b[e].pmf() - ws.psi2ToX[e].pmf()).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("damping") {
  auto a = diagMsg(vec1(1.0), rvec1(1.0));
  auto b = diagMsg(vec1(3.0), rvec1(0.5));
  auto d = dampMessage(a, b, 0.25);
  CHECK(d.prec()[0] == doctest::Approx(0.25 * 1.0 + 0.75 * 2.0));
  CHECK((dampMessage(a, b, 1.0).precMean() - a.precMean()).norm() == 0.0);
}

TEST_CASE("noiseless single user toy") {
  Toy toy = makeToy(1, 1, 1, 1, 1e-8, 17);
  std::vector<ApWorkspace> aps{makeWorkspace(0, toy.real, toy.channels, toy.pilots, toy.params)};
  DecentralizedEp engine(aps, ApGraph(1), toy.params);
  std::vector<double> residuals;
  for (int i = 0; i < 5; ++i) residuals.push_back(engine.iterate({}));
  CHECK(residuals.back() < 1e-9);

  // fixed point: one more iteration does not move the beliefs
  const auto before = channelBelief(engine.workspaces()[0]);
  const auto xBefore = engine.symbolBeliefs(0);
  engine.iterate({});
  const auto after = channelBelief(engine.workspaces()[0]);
  const auto xAfter = engine.symbolBeliefs(0);
  CHECK(std::abs(after[0].mean()[0] - before[0].mean()[0]) < 1e-9 * std::abs(before[0].mean()[0]));
  CHECK((xAfter[0].pmf() - xBefore[0].pmf()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(std::abs(after[0].mean()[0] - toy.real.H[0](0, 0)) < 1e-3 * std::abs(toy.real.H[0](0, 0)));
}

TEST_CASE("engine parameter validation") {
  Toy toy = makeToy(1, 1, 1, 1, 0.1, 1);
  EngineParams p = toy.params;
  p.damping = 0.0;
  CHECK_THROWS_AS(p.validate(), ContractError);
  p = toy.params;
  p.prior = CategoricalMsg::uniform(2);
  CHECK_THROWS_AS(p.validate(), ContractError);
  p = toy.params;
  p.genieSymbols = {7};
  CHECK_THROWS_AS(p.validate(), ContractError);
}
