#include "cfep/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>

namespace cfep {

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double toDb(double v) { return 10.0 * std::log10(v); }

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

double SummaryRow::stderrNmse() const { return realizations > 0 ? stdNmse / std::sqrt(realizations) : 0.0; }

std::vector<SummaryRow> aggregate(std::span<const ResultRecord> records, std::span<const Estimator> estimators,
                                  std::span<const double> powers) {
  if (records.empty()) throw ContractError("aggregate: no records");
  std::vector<SummaryRow> rows;
  for (Estimator est : estimators) {
    for (double power : powers) {
      double sumNmse = 0.0, sumSnr = 0.0, sumSer = 0.0, sumIters = 0.0;
      int n = 0, nSer = 0;
      for (const auto& r : records) {
        if (r.estimator != est || r.txPowerDbm != power) continue;
        sumNmse += r.nmse;
        sumSnr += r.snr;
        sumIters += r.iterations;
        if (r.ser) {
          sumSer += *r.ser;
          ++nSer;
        }
        ++n;
      }
      if (n == 0) continue;
      SummaryRow row;
      row.estimator = est;
      row.txPowerDbm = power;
      row.realizations = n;
      row.meanNmse = sumNmse / n;
      row.snrDb = toDb(sumSnr / n);
      row.meanIters = sumIters / n;
      row.meanSer = nSer > 0 ? sumSer / nSer : std::numeric_limits<double>::quiet_NaN();
      double ss = 0.0;
      for (const auto& r : records)
        if (r.estimator == est && r.txPowerDbm == power) ss += (r.nmse - row.meanNmse) * (r.nmse - row.meanNmse);
      row.stdNmse = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
      rows.push_back(row);
    }
  }
  return rows;
}

void writeCsv(std::ostream& os, std::span<const SummaryRow> rows) {
  os << kCsvHeader << '\n';
  for (const auto& r : rows)
    os << toString(r.estimator) << ',' << fmt(r.txPowerDbm) << ',' << fmt(r.snrDb) << ',' << fmt(r.meanNmse) << ','
       << fmt(r.stdNmse) << ',' << fmt(r.meanSer) << ',' << r.realizations << ',' << fmt(r.meanIters) << '\n';
}

void writeSvg(std::ostream& os, std::span<const SummaryRow> rows) {
  const double W = 640, H = 440, left = 70, right = 170, top = 30, bottom = 60;
  const double plotW = W - left - right, plotH = H - top - bottom;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& r : rows) {
    xmin = std::min(xmin, r.txPowerDbm);
    xmax = std::max(xmax, r.txPowerDbm);
    if (r.meanNmse > 0.0) {
      ymin = std::min(ymin, toDb(r.meanNmse));
      ymax = std::max(ymax, toDb(r.meanNmse));
    }
  }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1;
  if (xmax == xmin) xmin -= 1, xmax += 1;
  if (!std::isfinite(ymin)) ymin = -1, ymax = 0;
  ymin = 5.0 * std::floor(ymin / 5.0);
  ymax = 5.0 * std::ceil(ymax / 5.0);
  if (ymax == ymin) ymax += 5.0;

  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * plotW; };
  auto py = [&](double y) { return top + (ymax - y) / (ymax - ymin) * plotH; };

  char buf[256];
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n",
                left, top, plotW, plotH);
  os << buf;

  const double ystep = (ymax - ymin) > 30 ? 10.0 : 5.0;
  for (double y = ymin; y <= ymax + 1e-9; y += ystep) {
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%g\" y1=\"%.2f\" x2=\"%g\" y2=\"%.2f\" stroke=\"#ddd\"/>"
                  "<text x=\"%g\" y=\"%.2f\" text-anchor=\"end\">%g</text>\n",
                  left, py(y), left + plotW, py(y), left - 6, py(y) + 4, y);
    os << buf;
  }
  std::vector<double> xs;
  for (const auto& r : rows)
    if (std::find(xs.begin(), xs.end(), r.txPowerDbm) == xs.end()) xs.push_back(r.txPowerDbm);
  for (double x : xs) {
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.2f\" y1=\"%g\" x2=\"%.2f\" y2=\"%g\" stroke=\"#ddd\"/>"
                  "<text x=\"%.2f\" y=\"%g\" text-anchor=\"middle\">%g</text>\n",
                  px(x), top, px(x), top + plotH, px(x), top + plotH + 18, x);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">transmit power [dBm]</text>\n",
                left + plotW / 2, H - 15);
  os << buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"18\" y=\"%g\" text-anchor=\"middle\" transform=\"rotate(-90 18 %g)\">NMSE [dB]</text>\n",
                top + plotH / 2, top + plotH / 2);
  os << buf;

  std::vector<Estimator> order;
  for (const auto& r : rows)
    if (std::find(order.begin(), order.end(), r.estimator) == order.end()) order.push_back(r.estimator);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const char* color = kColors[i % std::size(kColors)];
    std::string points;
    for (const auto& r : rows) {
      if (r.estimator != order[i] || !(r.meanNmse > 0.0)) continue;
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(r.txPowerDbm), py(toDb(r.meanNmse)));
      points += buf;
      std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\"/>\n", px(r.txPowerDbm),
                    py(toDb(r.meanNmse)), color);
      os << buf;
    }
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << points << "\"/>\n";
    const double ly = top + 16 + 20.0 * static_cast<double>(i);
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\" stroke-width=\"2\"/>"
                  "<text x=\"%g\" y=\"%g\">%s</text>\n",
                  left + plotW + 12, ly, left + plotW + 36, ly, color, left + plotW + 42, ly + 4,
                  std::string(toString(order[i])).c_str());
    os << buf;
  }
  os << "</svg>\n";
}

std::vector<SummaryRow> aggregateAndEmit(std::span<const ResultRecord> records, const RunConfig& config) {
  auto rows = aggregate(records, config.estimators, config.txPowerDbmList);
  auto emit = [&](const std::string& path, auto&& writer) {
    if (path.empty()) return;
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    writer(os);
    os.flush();
    if (!os) throw std::runtime_error("write failed for '" + path + "'");
  };
  emit(config.output.csvPath, [&](std::ostream& os) { writeCsv(os, rows); });
  emit(config.output.plotPath, [&](std::ostream& os) { writeSvg(os, rows); });
  return rows;
}

}  // namespace cfep
