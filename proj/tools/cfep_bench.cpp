// Serial vs OpenMP timing for the two parallel kernels: the realization
// fan-out of the estimator suite and the parallel AP schedule.
//
//   cfep_bench [--realizations R] [--repeats n] [--threads t]

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>

#include "CLI11.hpp"
#include "cfep/harness.hpp"

namespace {

double timeIt(int repeats, const std::function<void()>& body) {
  double best = 1e300;
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs openmp benchmark"};
  int realizations = 4;
  int repeats = 3;
  int threads = 0;
  app.add_option("--realizations", realizations, "realizations per power point");
  app.add_option("--repeats", repeats, "timing repeats (best is reported)");
  app.add_option("--threads", threads, "OpenMP threads (0: runtime default)");
  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);

  cfep::RunConfig config;
  config.txPowerDbmList = {10.0, 20.0};
  config.realizations = realizations;
  config.estimators = {cfep::Estimator::proposed};

  std::printf("openmp threads: %d\n", cfep::openmpThreads());
  std::printf("%-28s %12s %12s %9s %s\n", "kernel", "serial [s]", "openmp [s]", "speedup", "identical");

  cfep::SuiteResult a, b;
  const double s1 = timeIt(repeats, [&] { a = cfep::runEstimatorSuite(config, cfep::Exec::serial); });
  const double p1 = timeIt(repeats, [&] { b = cfep::runEstimatorSuite(config, cfep::Exec::openmp); });
  bool same = a.records.size() == b.records.size();
  for (std::size_t i = 0; same && i < a.records.size(); ++i) same = a.records[i].nmse == b.records[i].nmse;
  std::printf("%-28s %12.4f %12.4f %9.2f %s\n", "suite realization fan-out", s1, p1, s1 / p1, same ? "yes" : "NO");

  config.algorithm.schedule = cfep::Schedule::parallel;
  const auto job = cfep::prepareJob(config, 1, 0);
  auto runOnce = [&](cfep::Exec exec, std::vector<Eigen::MatrixXcd>& est) {
    auto engine = cfep::DecentralizedEp::fromRealization(job.realization, job.channels, job.pilots, job.graph, job.params);
    auto opts = cfep::runOptions(config);
    opts.iteration.exec = exec;
    engine.run(opts);
    est = engine.channelEstimates();
  };
  std::vector<Eigen::MatrixXcd> ea, eb;
  const double s2 = timeIt(repeats, [&] { runOnce(cfep::Exec::serial, ea); });
  const double p2 = timeIt(repeats, [&] { runOnce(cfep::Exec::openmp, eb); });
  same = ea.size() == eb.size();
  for (std::size_t i = 0; same && i < ea.size(); ++i) same = ea[i] == eb[i];
  std::printf("%-28s %12.4f %12.4f %9.2f %s\n", "parallel AP schedule", s2, p2, s2 / p2, same ? "yes" : "NO");
  return 0;
}
