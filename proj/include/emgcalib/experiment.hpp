#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "emgcalib/calibration.hpp"
#include "emgcalib/classifier.hpp"
#include "emgcalib/dataset.hpp"

namespace emgcalib::harness {

struct FeatureConfig {
  std::string mode = "smoothed";  // "smoothed" (rectify + low-pass) or "identity"
  double cutoff_hz = 2.0;
  int stride = 1;
  bool drop_transient = false;
  bool standardize = false;

  static FeatureConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct ExperimentConfig {
  std::filesystem::path dataset_root;
  std::vector<models::ClassifierConfig> classifiers;
  FeatureConfig features;
  std::vector<int> training_trials{1, 2};
  int bins = 10;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig from_file(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

// One line of the aggregated metrics table.
struct ResultRow {
  std::string dataset;
  std::string classifier;
  double accuracy = 0, ece = 0, mce = 0;
};

struct CellResult {
  int participant = 0;
  std::string classifier;
  double accuracy = 0;
  calib::CalibrationReport report;
  nlohmann::json model;
};

struct CellFailure {
  int participant = 0;
  std::string classifier;
  std::string message;
};

struct ExperimentResult {
  std::string dataset_name;
  std::vector<ResultRow> rows;      // one per classifier, config order
  std::vector<CellResult> cells;    // per (participant, classifier)
  std::vector<CellFailure> failures;
};

// Per-participant protocol: extract features, fit every classifier on the
// training trials, evaluate accuracy/ECE/MCE on the remaining trials, and
// aggregate across participants by unweighted mean. Fit failures are recorded
// per cell and do not stop the run.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Writes metrics.csv, scatter.csv/svg, reliability/<participant>_<classifier>
// CSV+SVG pairs, models/*.json and (when present) failures.csv.
void emit_report(const ExperimentResult& result, const std::filesystem::path& out_dir);

std::string metrics_csv(const std::vector<ResultRow>& rows);
std::string scatter_csv(const std::vector<ResultRow>& rows);
std::string scatter_svg(const std::vector<ResultRow>& rows);

}  // namespace emgcalib::harness
