#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "emgcalib/signal.hpp"

namespace emgcalib::harness {

// Raised on malformed dataset layouts or files.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Canonical dataset description stored in <root>/manifest.json.
struct DatasetManifest {
  std::string name;
  int classes = 0;              // C, motion labels are 1..C
  int channels = 0;             // D, columns per trial file
  double sample_rate_hz = 0.0;  // fs
  std::vector<int> participants;
  std::vector<int> trials;
  std::vector<int> labels;          // defaults to 1..C
  std::vector<int> channel_subset;  // optional 1-based selection (middle-band case)

  void validate() const;
  static DatasetManifest from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// One motion repetition: <root>/p<participant>/t<trial>/m<label>.csv.
struct TrialRecording {
  int participant = 0;
  int trial = 0;
  int label = 0;  // 1-based motion label
  signal::RawRecording recording;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<TrialRecording> recordings;  // ordered (participant, trial, label)

  std::vector<const TrialRecording*> for_participant(int participant) const;
};

// Strict loader: every (participant, trial, label) file must exist, be
// non-empty, parse as plain decimal CSV, and have exactly `channels` columns.
// The channel subset from the manifest is applied to the returned recordings.
Dataset load_dataset(const std::filesystem::path& root);

// Writes a dataset in the canonical layout (used by the synth CLI and tests).
void write_dataset(const std::filesystem::path& root, const DatasetManifest& manifest,
                   const std::vector<TrialRecording>& recordings);

}  // namespace emgcalib::harness
