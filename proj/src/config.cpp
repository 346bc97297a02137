#include "cfep/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace cfep {

namespace {

template <class E, std::size_t N>
E lookup(std::string_view name, const std::pair<std::string_view, E> (&table)[N], const char* what) {
  for (const auto& [key, value] : table)
    if (key == name) return value;
  throw ContractError(std::string("unknown ") + what + " '" + std::string(name) + "'");
}

constexpr std::pair<std::string_view, Estimator> kEstimatorNames[] = {
    {"proposed", Estimator::proposed},
    {"genie_ep", Estimator::genieEp},
    {"mmse_genie", Estimator::mmseGenie},
    {"pilot_only", Estimator::pilotOnly},
};
constexpr std::pair<std::string_view, ExtrinsicMode> kModeNames[] = {
    {"exact", ExtrinsicMode::exact},
    {"simplified", ExtrinsicMode::simplified},
};
constexpr std::pair<std::string_view, Schedule> kScheduleNames[] = {
    {"sequential", Schedule::sequential},
    {"parallel", Schedule::parallel},
};
constexpr std::pair<std::string_view, GraphKind> kGraphNames[] = {
    {"grid", GraphKind::grid},
    {"tree", GraphKind::tree},
};

template <class E, std::size_t N>
std::string_view nameOf(E value, const std::pair<std::string_view, E> (&table)[N]) {
  for (const auto& [key, v] : table)
    if (v == value) return key;
  return "?";
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> splitList(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ContractError("empty list element");
    out.push_back(item);
  }
  if (out.empty()) throw ContractError("empty list");
  return out;
}

double toDouble(const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ContractError("expected a number, got '" + v + "'");
  }
  if (used != v.size()) throw ContractError("expected a number, got '" + v + "'");
  return d;
}

long long toInteger(const std::string& v) {
  std::size_t used = 0;
  long long i = 0;
  try {
    i = std::stoll(v, &used);
  } catch (const std::exception&) {
    throw ContractError("expected an integer, got '" + v + "'");
  }
  if (used != v.size()) throw ContractError("expected an integer, got '" + v + "'");
  return i;
}

int toInt(const std::string& v) {
  const long long i = toInteger(v);
  if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max())
    throw ContractError("integer out of range: " + v);
  return static_cast<int>(i);
}

bool toBool(const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ContractError("expected true or false, got '" + v + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"areaSide", [](RunConfig& c, const std::string& v) { c.scenario.areaSide = toDouble(v); }},
      {"apGrid", [](RunConfig& c, const std::string& v) { c.scenario.apGrid = toInt(v); }},
      {"numUts", [](RunConfig& c, const std::string& v) { c.scenario.numUts = toInt(v); }},
      {"N", [](RunConfig& c, const std::string& v) { c.scenario.numAntennas = toInt(v); }},
      {"P", [](RunConfig& c, const std::string& v) { c.scenario.pilotLength = toInt(v); }},
      {"T", [](RunConfig& c, const std::string& v) { c.scenario.numSlots = toInt(v); }},
      {"constellation", [](RunConfig& c, const std::string& v) { c.scenario.constellation = v; }},
      {"noiseDbm", [](RunConfig& c, const std::string& v) { c.scenario.noiseDbm = toDouble(v); }},
      {"redrawUts", [](RunConfig& c, const std::string& v) { c.scenario.redrawUts = toBool(v); }},
      {"txPowerDbmList",
       [](RunConfig& c, const std::string& v) {
         c.txPowerDbmList.clear();
         for (const auto& item : splitList(v)) c.txPowerDbmList.push_back(toDouble(item));
       }},
      {"realizations", [](RunConfig& c, const std::string& v) { c.realizations = toInt(v); }},
      {"seed",
       [](RunConfig& c, const std::string& v) {
         const long long s = toInteger(v);
         if (s < 0) throw ContractError("seed must be non-negative");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"estimators",
       [](RunConfig& c, const std::string& v) {
         c.estimators.clear();
         for (const auto& item : splitList(v)) c.estimators.push_back(parseEstimator(item));
       }},
      {"exec", [](RunConfig& c, const std::string& v) { c.exec = parseExec(v); }},
      {"mode", [](RunConfig& c, const std::string& v) { c.algorithm.mode = parseMode(v); }},
      {"maxIterations", [](RunConfig& c, const std::string& v) { c.algorithm.maxIterations = toInt(v); }},
      {"tolerance", [](RunConfig& c, const std::string& v) { c.algorithm.tolerance = toDouble(v); }},
      {"damping", [](RunConfig& c, const std::string& v) { c.algorithm.damping = toDouble(v); }},
      {"precisionFloor", [](RunConfig& c, const std::string& v) { c.algorithm.precisionFloor = toDouble(v); }},
      {"schedule", [](RunConfig& c, const std::string& v) { c.algorithm.schedule = parseSchedule(v); }},
      {"graph", [](RunConfig& c, const std::string& v) { c.algorithm.graph = parseGraph(v); }},
      {"treeRoot", [](RunConfig& c, const std::string& v) { c.algorithm.treeRoot = toInt(v); }},
      {"csv", [](RunConfig& c, const std::string& v) { c.output.csvPath = v; }},
      {"plot", [](RunConfig& c, const std::string& v) { c.output.plotPath = v; }},
      {"traceMessages", [](RunConfig& c, const std::string& v) { c.output.traceMessages = toBool(v); }},
      {"traceEnvelopes", [](RunConfig& c, const std::string& v) { c.output.traceEnvelopes = toBool(v); }},
  };
  return table;
}

}  // namespace

std::string_view toString(Estimator e) { return nameOf(e, kEstimatorNames); }
Estimator parseEstimator(std::string_view name) { return lookup(name, kEstimatorNames, "estimator"); }
std::string_view toString(ExtrinsicMode m) { return nameOf(m, kModeNames); }
ExtrinsicMode parseMode(std::string_view name) { return lookup(name, kModeNames, "mode"); }
std::string_view toString(Schedule s) { return nameOf(s, kScheduleNames); }
Schedule parseSchedule(std::string_view name) { return lookup(name, kScheduleNames, "schedule"); }
std::string_view toString(GraphKind g) { return nameOf(g, kGraphNames); }
GraphKind parseGraph(std::string_view name) { return lookup(name, kGraphNames, "graph"); }

void RunConfig::validate() const {
  scenario.validate();
  Constellation::byName(scenario.constellation);
  if (txPowerDbmList.empty()) throw ContractError("txPowerDbmList must not be empty");
  for (double p : txPowerDbmList)
    if (!std::isfinite(p)) throw ContractError("txPowerDbmList: non-finite power");
  if (realizations < 1) throw ContractError("realizations must be >= 1");
  if (estimators.empty()) throw ContractError("estimators must not be empty");
  std::set<Estimator> seen(estimators.begin(), estimators.end());
  if (seen.size() != estimators.size()) throw ContractError("estimators: duplicate entry");
  if (algorithm.maxIterations < 1) throw ContractError("maxIterations must be >= 1");
  if (!(algorithm.tolerance >= 0.0)) throw ContractError("tolerance must be >= 0");
  if (!(algorithm.damping > 0.0 && algorithm.damping <= 1.0)) throw ContractError("damping must lie in (0, 1]");
  if (!(algorithm.precisionFloor > 0.0) || !std::isfinite(algorithm.precisionFloor))
    throw ContractError("precisionFloor must be positive");
  if (algorithm.treeRoot < 0 || algorithm.treeRoot >= scenario.numAps())
    throw ContractError("treeRoot out of range");
}

RunConfig parseConfig(std::istream& in) {
  RunConfig config;
  std::set<std::string, std::less<>> seen;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = "config line " + std::to_string(lineNo) + ": ";
    if (eq == std::string::npos) throw ContractError(where + "expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ContractError(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ContractError(where + "repeated key '" + key + "'");
    if (value.empty()) throw ContractError(where + "missing value for '" + key + "'");
    try {
      it->second(config, value);
    } catch (const ContractError& e) {
      throw ContractError(where + key + ": " + e.what());
    }
  }
  config.validate();
  return config;
}

RunConfig loadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  try {
    return parseConfig(in);
  } catch (const ContractError& e) {
    throw ContractError(path + ": " + e.what());
  }
}

void writeConfig(std::ostream& os, const RunConfig& c) {
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  auto boolean = [](bool b) { return b ? "true" : "false"; };
  os << "areaSide = " << num(c.scenario.areaSide) << '\n'
     << "apGrid = " << c.scenario.apGrid << '\n'
     << "numUts = " << c.scenario.numUts << '\n'
     << "N = " << c.scenario.numAntennas << '\n'
     << "P = " << c.scenario.pilotLength << '\n'
     << "T = " << c.scenario.numSlots << '\n'
     << "constellation = " << c.scenario.constellation << '\n'
     << "noiseDbm = " << num(c.scenario.noiseDbm) << '\n'
     << "redrawUts = " << boolean(c.scenario.redrawUts) << '\n';
  os << "txPowerDbmList = ";
  for (std::size_t i = 0; i < c.txPowerDbmList.size(); ++i) os << (i ? ", " : "") << num(c.txPowerDbmList[i]);
  os << '\n'
     << "realizations = " << c.realizations << '\n'
     << "seed = " << c.seed << '\n';
  os << "estimators = ";
  for (std::size_t i = 0; i < c.estimators.size(); ++i) os << (i ? ", " : "") << toString(c.estimators[i]);
  os << '\n'
     << "exec = " << toString(c.exec) << '\n'
     << "mode = " << toString(c.algorithm.mode) << '\n'
     << "maxIterations = " << c.algorithm.maxIterations << '\n'
     << "tolerance = " << num(c.algorithm.tolerance) << '\n'
     << "damping = " << num(c.algorithm.damping) << '\n'
     << "precisionFloor = " << num(c.algorithm.precisionFloor) << '\n'
     << "schedule = " << toString(c.algorithm.schedule) << '\n'
     << "graph = " << toString(c.algorithm.graph) << '\n'
     << "treeRoot = " << c.algorithm.treeRoot << '\n';
  if (!c.output.csvPath.empty()) os << "csv = " << c.output.csvPath << '\n';
  if (!c.output.plotPath.empty()) os << "plot = " << c.output.plotPath << '\n';
  os << "traceMessages = " << boolean(c.output.traceMessages) << '\n'
     << "traceEnvelopes = " << boolean(c.output.traceEnvelopes) << '\n';
}

}  // namespace cfep
