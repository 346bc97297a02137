#include <omp.h>

#include <atomic>
#include <sstream>

#include "cfep/consensus.hpp"
#include "cfep/harness.hpp"
#include "cfep/kernels.hpp"
#include "cfep/output.hpp"
#include "doctest.h"

using namespace cfep;

namespace {

RunConfig tinyConfig() {
  RunConfig c;
  c.scenario.apGrid = 2;
  c.scenario.numUts = 3;
  c.scenario.pilotLength = 2;
  c.scenario.numSlots = 4;
  c.txPowerDbmList = {10.0, 25.0};
  c.realizations = 4;
  c.algorithm.maxIterations = 5;
  return c;
}

// Forces a real team even on a single core.
struct ThreadGuard {
  int saved = omp_get_max_threads();
  explicit ThreadGuard(int n) { omp_set_num_threads(n); }
  ~ThreadGuard() { omp_set_num_threads(saved); }
};

}  // namespace

TEST_CASE("exec names") {
  CHECK((parseExec("serial") == Exec::serial));
  CHECK((parseExec("openmp") == Exec::openmp));
  CHECK(std::string(toString(Exec::openmp)) == "openmp");
  CHECK_THROWS_AS(parseExec("cuda"), ContractError);
  CHECK(openmpThreads() >= 1);
}

TEST_CASE("forEachIndex visits every index once") {
  ThreadGuard guard(4);
  for (Exec e : {Exec::serial, Exec::openmp}) {
    std::vector<std::atomic<int>> hits(97);
    forEachIndex(e, 97, [&](int i) { hits[static_cast<std::size_t>(i)]++; });
    for (auto& h : hits) CHECK(h.load() == 1);
  }
  forEachIndex(Exec::openmp, 0, [](int) { FAIL("no body expected"); });
}

TEST_CASE("suite fan-out matches the serial reference") {
  ThreadGuard guard(4);
  const RunConfig c = tinyConfig();
  const auto a = runEstimatorSuite(c, Exec::serial);
  const auto b = runEstimatorSuite(c, Exec::openmp);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK((a.records[i].estimator == b.records[i].estimator));
    CHECK(a.records[i].realization == b.records[i].realization);
    CHECK(a.records[i].nmse == b.records[i].nmse);
    CHECK(a.records[i].ser == b.records[i].ser);
    CHECK(a.records[i].iterations == b.records[i].iterations);
  }
  std::ostringstream sa, sb;
  writeCsv(sa, aggregate(a.records, c.estimators, c.txPowerDbmList));
  writeCsv(sb, aggregate(b.records, c.estimators, c.txPowerDbmList));
  CHECK(sa.str() == sb.str());
}

TEST_CASE("parallel schedule matches the serial reference") {
  ThreadGuard guard(4);
  const RunConfig c = tinyConfig();
  const auto job = prepareJob(c, 1, 2);
  auto serial = DecentralizedEp::fromRealization(job.realization, job.channels, job.pilots, job.graph, job.params);
  auto threaded = serial;
  for (int i = 0; i < 6; ++i) {
    const double ra = serial.iterate({Schedule::parallel, Exec::serial});
    const double rb = threaded.iterate({Schedule::parallel, Exec::openmp});
    CHECK((ra == rb || (std::isinf(ra) && std::isinf(rb))));
  }
  const auto ea = serial.channelEstimates();
  const auto eb = threaded.channelEstimates();
  for (std::size_t l = 0; l < ea.size(); ++l) CHECK(ea[l] == eb[l]);
  for (int l = 0; l < job.graph.size(); ++l) {
    const auto xa = serial.symbolBeliefs(l);
    const auto xb = threaded.symbolBeliefs(l);
    for (std::size_t e = 0; e < xa.size(); ++e) CHECK(xa[e].pmf() == xb[e].pmf());
  }
}

TEST_CASE("sequential schedule ignores the exec policy for the AP loop") {
  ThreadGuard guard(4);
  const auto job = prepareJob(tinyConfig(), 0, 1);
  auto a = DecentralizedEp::fromRealization(job.realization, job.channels, job.pilots, job.graph, job.params);
  auto b = a;
  for (int i = 0; i < 4; ++i) {
    a.iterate({Schedule::sequential, Exec::serial});
    b.iterate({Schedule::sequential, Exec::openmp});
  }
  const auto ea = a.channelEstimates();
  const auto eb = b.channelEstimates();
  for (std::size_t l = 0; l < ea.size(); ++l) CHECK(ea[l] == eb[l]);
}
