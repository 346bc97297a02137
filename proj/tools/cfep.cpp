// cfep: decentralized semi-blind channel estimation simulator.
//
//   cfep run --config run.cfg [--seed N] [--out results.csv] [--plot fig.svg]
//            [--mode simplified|exact] [--graph grid|tree] [--exec serial|openmp]
//   cfep validate --config run.cfg
//   cfep trace --config run.cfg --out trace.jsonl [--envelopes env.jsonl]
//              [--power-index i] [--realization r] [--iterations n]
//   cfep dump --config run.cfg --out realization.txt [--power-index i] [--realization r]

#include <chrono>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "cfep/config.hpp"
#include "cfep/harness.hpp"
#include "cfep/output.hpp"
#include "cfep/trace.hpp"

namespace {

std::ofstream openOut(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  return os;
}

int cmdRun(cfep::RunConfig config) {
  const auto start = std::chrono::steady_clock::now();
  const auto suite = cfep::runEstimatorSuite(config, config.exec);
  for (const auto& f : suite.failures) std::cerr << "failed: " << f << '\n';
  std::cerr << "jobs completed " << (suite.jobs - suite.failedJobs) << "/" << suite.jobs << '\n';
  if (suite.records.empty()) {
    std::cerr << "error: no realization completed\n";
    return 1;
  }
  const auto rows = cfep::aggregateAndEmit(suite.records, config);
  if (config.output.csvPath.empty()) cfep::writeCsv(std::cout, rows);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cerr << "elapsed " << secs << " s\n";
  return suite.failedJobs == 0 ? 0 : 2;
}

int cmdTrace(const cfep::RunConfig& config, int powerIndex, int realization, int iterations,
             const std::string& out, const std::string& envOut) {
  const auto job = cfep::prepareJob(config, powerIndex, realization);
  std::ofstream msgs;
  std::ofstream envs;
  if (config.output.traceMessages) msgs = openOut(out);
  if (config.output.traceEnvelopes) envs = openOut(envOut.empty() ? out + ".envelopes" : envOut);
  cfep::JsonlTrace sink(config.output.traceMessages ? &msgs : nullptr,
                        config.output.traceEnvelopes ? &envs : nullptr);
  auto engine = cfep::DecentralizedEp::fromRealization(job.realization, job.channels, job.pilots, job.graph, job.params);
  auto opts = cfep::runOptions(config);
  if (iterations > 0) opts.maxIterations = iterations;
  const auto summary = engine.run(opts, &sink);
  std::cerr << "iterations " << summary.iterations << ", residual " << summary.residual << ", nmse "
            << cfep::nmse(engine.channelEstimates(), job.realization.H) << '\n';
  return 0;
}

int cmdDump(const cfep::RunConfig& config, int powerIndex, int realization, const std::string& out) {
  const auto job = cfep::prepareJob(config, powerIndex, realization);
  auto os = openOut(out);
  cfep::writeRealization(os, job.realization);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decentralized EP channel estimation for cell-free massive MIMO"};
  app.require_subcommand(1);

  std::string configPath;
  std::optional<std::uint64_t> seed;
  std::string out, plot, mode, graph, exec, envOut;
  int powerIndex = 0, realization = 0, iterations = 0;

  auto* run = app.add_subcommand("run", "Monte-Carlo sweep over the transmit powers");
  run->add_option("--config", configPath, "config file")->required();
  run->add_option("--seed", seed, "master seed override");
  run->add_option("--out", out, "CSV path override");
  run->add_option("--plot", plot, "SVG path override");
  run->add_option("--mode", mode, "simplified|exact");
  run->add_option("--graph", graph, "grid|tree");
  run->add_option("--exec", exec, "serial|openmp fan-out of realizations");

  auto* validate = app.add_subcommand("validate", "parse and check a config");
  validate->add_option("--config", configPath, "config file")->required();

  auto* trace = app.add_subcommand("trace", "JSONL dump of every message of one realization");
  trace->add_option("--config", configPath, "config file")->required();
  trace->add_option("--out", out, "message trace path")->required();
  trace->add_option("--envelopes", envOut, "consensus envelope trace path (default <out>.envelopes)");
  trace->add_option("--power-index", powerIndex, "index into txPowerDbmList");
  trace->add_option("--realization", realization, "realization index");
  trace->add_option("--iterations", iterations, "iteration cap (default from config)");

  auto* dump = app.add_subcommand("dump", "write one realization as text");
  dump->add_option("--config", configPath, "config file")->required();
  dump->add_option("--out", out, "output path")->required();
  dump->add_option("--power-index", powerIndex, "index into txPowerDbmList");
  dump->add_option("--realization", realization, "realization index");

  CLI11_PARSE(app, argc, argv);

  try {
    cfep::RunConfig config = cfep::loadConfig(configPath);
    if (*validate) {
      cfep::writeConfig(std::cout, config);
      std::cerr << "config ok\n";
      return 0;
    }
    if (*run) {
      if (seed) config.seed = *seed;
      if (!out.empty()) config.output.csvPath = out;
      if (!plot.empty()) config.output.plotPath = plot;
      if (!mode.empty()) config.algorithm.mode = cfep::parseMode(mode);
      if (!graph.empty()) config.algorithm.graph = cfep::parseGraph(graph);
      if (!exec.empty()) config.exec = cfep::parseExec(exec);
      config.validate();
      return cmdRun(std::move(config));
    }
    if (*trace) return cmdTrace(config, powerIndex, realization, iterations, out, envOut);
    if (*dump) return cmdDump(config, powerIndex, realization, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
