#include "cfep/trace.hpp"

#include <ostream>

#include <json.hpp>

namespace cfep {

namespace {

nlohmann::json pmfJson(const CategoricalMsg& msg) {
  auto arr = nlohmann::json::array();
  for (int i = 0; i < msg.size(); ++i) arr.push_back(msg[i]);
  return arr;
}

}  // namespace

void JsonlTrace::gaussian(int iteration, int ap, int k, int t, std::string_view kind, const DiagGaussianMsg& msg) {
  if (!messages_) return;
  nlohmann::json rec{{"iter", iteration}, {"ap", ap}, {"k", k}, {"t", t}, {"kind", kind}};
  auto prec = nlohmann::json::array();
  auto pm = nlohmann::json::array();
  for (int i = 0; i < msg.dim(); ++i) {
    prec.push_back(msg.prec()[i]);
    pm.push_back({msg.precMean()[i].real(), msg.precMean()[i].imag()});
  }
  rec["prec"] = std::move(prec);
  rec["prec_mean"] = std::move(pm);
  *messages_ << rec.dump() << '\n';
}

void JsonlTrace::categorical(int iteration, int ap, int k, int t, std::string_view kind, const CategoricalMsg& msg) {
  if (!messages_) return;
  nlohmann::json rec{{"iter", iteration}, {"ap", ap}, {"k", k}, {"t", t}, {"kind", kind}, {"pmf", pmfJson(msg)}};
  *messages_ << rec.dump() << '\n';
}

void JsonlTrace::envelope(int iteration, int from, int to, int k, int t, const CategoricalMsg& payload) {
  if (!envelopes_) return;
  nlohmann::json rec{{"iter", iteration}, {"from", from}, {"to", to}, {"k", k}, {"t", t}, {"pmf", pmfJson(payload)}};
  *envelopes_ << rec.dump() << '\n';
}

}  // namespace cfep
