#pragma once

#include <iosfwd>
#include <string_view>

#include "cfep/gaussian.hpp"

namespace cfep {

/// Receives every message as it is produced. Default methods ignore input.
class TraceSink {
 public:
  virtual ~TraceSink() = default;
  /// t is -1 for per-user messages (Psi3 side).
  virtual void gaussian(int /*iteration*/, int /*ap*/, int /*k*/, int /*t*/, std::string_view /*kind*/,
                        const DiagGaussianMsg& /*msg*/) {}
  virtual void categorical(int /*iteration*/, int /*ap*/, int /*k*/, int /*t*/, std::string_view /*kind*/,
                           const CategoricalMsg& /*msg*/) {}
  virtual void envelope(int /*iteration*/, int /*from*/, int /*to*/, int /*k*/, int /*t*/,
                        const CategoricalMsg& /*payload*/) {}
};

/// Line-delimited JSON trace. Message records:
///   {"iter":i,"ap":l,"k":k,"t":t,"kind":"psi2_to_h","prec":[..],"prec_mean":[[re,im],..]}
///   {"iter":i,"ap":l,"k":k,"t":t,"kind":"psi2_to_x","pmf":[..]}
/// Envelope records:
///   {"iter":i,"from":l,"to":l2,"k":k,"t":t,"pmf":[..]}
/// Either stream may be null to drop that record type.
class JsonlTrace : public TraceSink {
 public:
  JsonlTrace(std::ostream* messages, std::ostream* envelopes) : messages_(messages), envelopes_(envelopes) {}

  void gaussian(int iteration, int ap, int k, int t, std::string_view kind, const DiagGaussianMsg& msg) override;
  void categorical(int iteration, int ap, int k, int t, std::string_view kind, const CategoricalMsg& msg) override;
  void envelope(int iteration, int from, int to, int k, int t, const CategoricalMsg& payload) override;

 private:
  std::ostream* messages_;
  std::ostream* envelopes_;
};

}  // namespace cfep
