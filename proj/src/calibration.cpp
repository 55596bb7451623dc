#include "emgcalib/calibration.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace emgcalib::calib {

namespace {

int bin_of(double confidence, int bin_count) {
  // Nominal index, then nudge so the half-open boundaries are decided by
  // comparison against m/M rather than by floor rounding.
  int m = static_cast<int>(confidence * bin_count) + 1;
  m = std::min(std::max(m, 1), bin_count);
  while (m > 1 && confidence <= static_cast<double>(m - 1) / bin_count) --m;
  while (m < bin_count && confidence > static_cast<double>(m) / bin_count) ++m;
  return m;
}

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", value);
  return buf;
}

}  // namespace

std::vector<BinStats> bin_predictions(const std::vector<double>& confidences,
                                      const std::vector<bool>& correct, int bin_count) {
  if (bin_count < 1) throw std::invalid_argument("bin_predictions: M must be >= 1");
  if (confidences.size() != correct.size())
    throw std::invalid_argument("bin_predictions: confidence/correctness size mismatch");

  std::vector<BinStats> bins(static_cast<std::size_t>(bin_count));
  std::vector<double> conf_sum(static_cast<std::size_t>(bin_count), 0.0);
  std::vector<long> hits(static_cast<std::size_t>(bin_count), 0);
  for (int m = 0; m < bin_count; ++m) bins[static_cast<std::size_t>(m)].index = m + 1;

  for (std::size_t i = 0; i < confidences.size(); ++i) {
    const double p = confidences[i];
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("bin_predictions: confidence outside [0, 1]");
    const std::size_t m = static_cast<std::size_t>(bin_of(p, bin_count) - 1);
    bins[m].count += 1;
    conf_sum[m] += p;
    if (correct[i]) hits[m] += 1;
  }
  for (std::size_t m = 0; m < bins.size(); ++m) {
    if (bins[m].count > 0) {
      bins[m].accuracy = static_cast<double>(hits[m]) / static_cast<double>(bins[m].count);
      bins[m].confidence = conf_sum[m] / static_cast<double>(bins[m].count);
    }
  }
  return bins;
}

double ece(const std::vector<BinStats>& bins, long total) {
  if (total <= 0) throw std::invalid_argument("ece: total sample count must be positive");
  long binned = 0;
  double sum = 0.0;
  for (const BinStats& b : bins) {
    binned += b.count;
    sum += static_cast<double>(b.count) / static_cast<double>(total) *
           std::abs(b.accuracy - b.confidence);
  }
  if (binned != total)
    throw std::invalid_argument("ece: bin counts do not add up to the sample count");
  return sum;
}

double mce(const std::vector<BinStats>& bins) {
  double worst = -1.0;
  for (const BinStats& b : bins)
    if (b.count > 0) worst = std::max(worst, std::abs(b.accuracy - b.confidence));
  if (worst < 0.0) throw std::invalid_argument("mce: all bins are empty");
  return worst;
}

CalibrationReport make_report(const std::vector<double>& confidences,
                              const std::vector<bool>& correct, int bin_count) {
  CalibrationReport report;
  report.bins = bin_predictions(confidences, correct, bin_count);
  report.total = static_cast<long>(confidences.size());
  report.ece = ece(report.bins, report.total);
  report.mce = mce(report.bins);
  return report;
}

std::vector<DiagramRow> reliability_rows(const CalibrationReport& report) {
  const int m_count = report.bin_count();
  std::vector<DiagramRow> rows;
  rows.reserve(static_cast<std::size_t>(m_count));
  for (const BinStats& b : report.bins) {
    DiagramRow row;
    row.bin_index = b.index;
    row.lower = static_cast<double>(b.index - 1) / m_count;
    row.upper = static_cast<double>(b.index) / m_count;
    row.count = b.count;
    row.accuracy = b.accuracy;
    row.confidence = b.confidence;
    row.gap = b.count > 0 ? std::abs(b.accuracy - b.confidence) : 0.0;
    rows.push_back(row);
  }
  return rows;
}

std::string reliability_csv(const CalibrationReport& report) {
  std::string out = "bin_index,lower,upper,count,accuracy,confidence,gap\n";
  for (const DiagramRow& row : reliability_rows(report)) {
    out += std::to_string(row.bin_index) + ',' + format_double(row.lower) + ',' +
           format_double(row.upper) + ',' + std::to_string(row.count) + ',' +
           format_double(row.accuracy) + ',' + format_double(row.confidence) + ',' +
           format_double(row.gap) + '\n';
  }
  return out;
}

std::string reliability_svg(const CalibrationReport& report, const std::string& title) {
  const int m_count = report.bin_count();
  const double size = 420.0, margin = 50.0;
  const double plot = size - 2.0 * margin;
  auto xpos = [&](double v) { return margin + v * plot; };
  auto ypos = [&](double v) { return size - margin - v * plot; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_double(size) +
         "\" height=\"" + format_double(size) + "\" viewBox=\"0 0 " + format_double(size) + " " +
         format_double(size) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + format_double(size / 2) +
         "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\" font-family=\"sans-serif\">" +
         title + "</text>\n";

  for (const DiagramRow& row : reliability_rows(report)) {
    const double x0 = xpos(row.lower), x1 = xpos(row.upper);
    const double width = x1 - x0 - 2.0;
    if (row.count > 0) {
      // Red gap segment between the accuracy bar and the diagonal level.
      const double lo = std::min(row.accuracy, row.confidence);
      const double hi = std::max(row.accuracy, row.confidence);
      svg += "<rect x=\"" + format_double(x0 + 1) + "\" y=\"" + format_double(ypos(hi)) +
             "\" width=\"" + format_double(width) + "\" height=\"" +
             format_double(std::max(ypos(lo) - ypos(hi), 0.5)) +
             "\" fill=\"#d62728\" fill-opacity=\"0.55\"/>\n";
      svg += "<rect x=\"" + format_double(x0 + 1) + "\" y=\"" + format_double(ypos(row.accuracy)) +
             "\" width=\"" + format_double(width) + "\" height=\"" +
             format_double(ypos(0.0) - ypos(row.accuracy)) +
             "\" fill=\"#1f77b4\" fill-opacity=\"0.85\"/>\n";
    }
  }

  // Identity diagonal and axes.
  svg += "<line x1=\"" + format_double(xpos(0)) + "\" y1=\"" + format_double(ypos(0)) +
         "\" x2=\"" + format_double(xpos(1)) + "\" y2=\"" + format_double(ypos(1)) +
         "\" stroke=\"black\" stroke-dasharray=\"6,4\"/>\n";
  svg += "<line x1=\"" + format_double(xpos(0)) + "\" y1=\"" + format_double(ypos(0)) +
         "\" x2=\"" + format_double(xpos(1)) + "\" y2=\"" + format_double(ypos(0)) +
         "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + format_double(xpos(0)) + "\" y1=\"" + format_double(ypos(0)) +
         "\" x2=\"" + format_double(xpos(0)) + "\" y2=\"" + format_double(ypos(1)) +
         "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= m_count; ++tick) {
    const double v = static_cast<double>(tick) / m_count;
    svg += "<line x1=\"" + format_double(xpos(v)) + "\" y1=\"" + format_double(ypos(0)) +
           "\" x2=\"" + format_double(xpos(v)) + "\" y2=\"" + format_double(ypos(0) + 4) +
           "\" stroke=\"black\"/>\n";
  }
  svg += "<text x=\"" + format_double(size / 2) + "\" y=\"" + format_double(size - 12) +
         "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">confidence</text>\n";
  svg += "<text x=\"14\" y=\"" + format_double(size / 2) +
         "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\" transform=\"rotate(-90 "
         "14 " + format_double(size / 2) + ")\">accuracy</text>\n";

  char label[64];
  std::snprintf(label, sizeof(label), "ECE = %.4f, MCE = %.4f", report.ece, report.mce);
  svg += "<text x=\"" + format_double(margin + 6) + "\" y=\"" + format_double(margin + 6) +
         "\" font-size=\"12\" font-family=\"sans-serif\">" + label + "</text>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace emgcalib::calib
