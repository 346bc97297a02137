#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cfep/config.hpp"
#include "cfep/harness.hpp"

namespace cfep {

/// One CSV row: statistics of one estimator at one transmit power.
struct SummaryRow {
  Estimator estimator = Estimator::proposed;
  double txPowerDbm = 0.0;
  double snrDb = 0.0;     // 10 log10 of the mean linear SNR
  double meanNmse = 0.0;  // average of per-realization NMSE
  double stdNmse = 0.0;   // sample standard deviation, 0 for one record
  double meanSer = 0.0;   // NaN when the estimator has no symbol decisions
  int realizations = 0;
  double meanIters = 0.0;

  /// Standard error of meanNmse.
  double stderrNmse() const;
};

/// Groups records by (estimator, power). Rows follow the estimator order of
/// `estimators`, then the order of `powers`; empty groups are skipped.
/// Throws ContractError for an empty record list.
std::vector<SummaryRow> aggregate(std::span<const ResultRecord> records, std::span<const Estimator> estimators,
                                  std::span<const double> powers);

inline constexpr const char* kCsvHeader =
    "estimator,tx_power_dbm,snr_db,mean_nmse,std_nmse,mean_ser,realizations,mean_iters";

/// Header plus one line per row, %.10g formatting, "nan" for missing SER.
void writeCsv(std::ostream& os, std::span<const SummaryRow> rows);

/// NMSE (dB) against transmit power (dBm), one polyline per estimator.
void writeSvg(std::ostream& os, std::span<const SummaryRow> rows);

/// Aggregates and writes the CSV/plot paths set in config.output. Throws
/// std::runtime_error naming the path on I/O failure.
std::vector<SummaryRow> aggregateAndEmit(std::span<const ResultRecord> records, const RunConfig& config);

}  // namespace cfep
