#pragma once

#include <string>
#include <vector>

namespace emgcalib::calib {

// Per-bin statistics over the interval ((index-1)/M, index/M].
struct BinStats {
  int index = 0;        // 1-based bin index
  long count = 0;       // |B_m|
  double accuracy = 0;  // mean correctness, 0 when empty
  double confidence = 0;  // mean confidence, 0 when empty
};

struct CalibrationReport {
  std::vector<BinStats> bins;  // length M
  long total = 0;              // N
  double ece = 0.0;
  double mce = 0.0;

  int bin_count() const { return static_cast<int>(bins.size()); }
};

// Equal-width binning of confidences into M half-open intervals
// ((m-1)/M, m/M]; confidence 0 goes to bin 1. Confidences must lie in [0,1].
std::vector<BinStats> bin_predictions(const std::vector<double>& confidences,
                                      const std::vector<bool>& correct, int bin_count);

// Expected calibration error: sum_m (|B_m|/N) |acc(B_m) - conf(B_m)|.
// Bin counts must add up to total, and total must be positive.
double ece(const std::vector<BinStats>& bins, long total);

// Maximum calibration error: the largest |acc - conf| over non-empty bins.
double mce(const std::vector<BinStats>& bins);

// Bins + both scalar errors in one pass.
CalibrationReport make_report(const std::vector<double>& confidences,
                              const std::vector<bool>& correct, int bin_count);

// One reliability-diagram row per bin, empty bins included.
struct DiagramRow {
  int bin_index = 0;
  double lower = 0, upper = 0;
  long count = 0;
  double accuracy = 0, confidence = 0, gap = 0;
};

std::vector<DiagramRow> reliability_rows(const CalibrationReport& report);

// CSV with header bin_index,lower,upper,count,accuracy,confidence,gap.
std::string reliability_csv(const CalibrationReport& report);

// Fig-style bar chart: accuracy bars, red gap segments against the identity
// diagonal, ECE annotation.
std::string reliability_svg(const CalibrationReport& report, const std::string& title);

}  // namespace emgcalib::calib
