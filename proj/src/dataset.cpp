#include "emgcalib/dataset.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace emgcalib::harness {

namespace fs = std::filesystem;

void DatasetManifest::validate() const {
  if (classes < 1) throw LoadError("manifest: classes must be >= 1");
  if (channels < 1) throw LoadError("manifest: channels must be >= 1");
  if (!(sample_rate_hz > 0.0)) throw LoadError("manifest: sample_rate_hz must be positive");
  if (participants.empty()) throw LoadError("manifest: participants list is empty");
  if (trials.empty()) throw LoadError("manifest: trials list is empty");
  if (labels.empty()) throw LoadError("manifest: labels list is empty");
  for (int label : labels)
    if (label < 1 || label > classes)
      throw LoadError("manifest: label " + std::to_string(label) + " outside 1.." +
                      std::to_string(classes));
  for (int ch : channel_subset)
    if (ch < 1 || ch > channels)
      throw LoadError("manifest: channel_subset entry " + std::to_string(ch) + " outside 1.." +
                      std::to_string(channels));
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j) {
  DatasetManifest m;
  m.name = j.value("name", "dataset");
  m.classes = j.at("classes").get<int>();
  m.channels = j.at("channels").get<int>();
  m.sample_rate_hz = j.at("sample_rate_hz").get<double>();
  m.participants = j.at("participants").get<std::vector<int>>();
  m.trials = j.at("trials").get<std::vector<int>>();
  if (j.contains("labels")) {
    m.labels = j.at("labels").get<std::vector<int>>();
  } else {
    for (int c = 1; c <= m.classes; ++c) m.labels.push_back(c);
  }
  if (j.contains("channel_subset"))
    m.channel_subset = j.at("channel_subset").get<std::vector<int>>();
  m.validate();
  return m;
}

nlohmann::json DatasetManifest::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["classes"] = classes;
  j["channels"] = channels;
  j["sample_rate_hz"] = sample_rate_hz;
  j["participants"] = participants;
  j["trials"] = trials;
  j["labels"] = labels;
  if (!channel_subset.empty()) j["channel_subset"] = channel_subset;
  return j;
}

std::vector<const TrialRecording*> Dataset::for_participant(int participant) const {
  std::vector<const TrialRecording*> out;
  for (const TrialRecording& rec : recordings)
    if (rec.participant == participant) out.push_back(&rec);
  return out;
}

namespace {

Eigen::MatrixXd parse_trial_csv(const fs::path& path, int expected_channels,
                                const std::string& context) {
  std::ifstream in(path);
  if (!in) throw LoadError("missing trial file " + path.string() + " (" + context + ")");

  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos) comma = line.size();
      double value = 0.0;
      const char* first = line.data() + pos;
      const char* last = line.data() + comma;
      while (first < last && (*first == ' ' || *first == '\t')) ++first;
      const auto [ptr, ec] = std::from_chars(first, last, value);
      if (ec != std::errc() || ptr != last)
        throw LoadError("unparseable value in " + path.string() + " (" + context + "), line " +
                        std::to_string(rows.size() + 1));
      row.push_back(value);
      pos = comma + 1;
      if (comma == line.size()) break;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw LoadError("ragged rows in " + path.string() + " (" + context + ")");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw LoadError("empty trial file " + path.string() + " (" + context + ")");
  if (static_cast<int>(rows.front().size()) != expected_channels)
    throw LoadError("channel mismatch in " + path.string() + " (" + context + "): expected " +
                    std::to_string(expected_channels) + " columns, found " +
                    std::to_string(rows.front().size()));

  Eigen::MatrixXd samples(expected_channels, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (int ch = 0; ch < expected_channels; ++ch)
      samples(ch, static_cast<Eigen::Index>(t)) = rows[t][static_cast<std::size_t>(ch)];
  return samples;
}

}  // namespace

Dataset load_dataset(const fs::path& root) {
  const fs::path manifest_path = root / "manifest.json";
  std::ifstream manifest_in(manifest_path);
  if (!manifest_in) throw LoadError("missing manifest " + manifest_path.string());
  nlohmann::json manifest_json;
  try {
    manifest_in >> manifest_json;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }

  Dataset dataset;
  dataset.manifest = DatasetManifest::from_json(manifest_json);
  const DatasetManifest& m = dataset.manifest;

  for (int participant : m.participants) {
    for (int trial : m.trials) {
      for (int label : m.labels) {
        const fs::path path = root / ("p" + std::to_string(participant)) /
                              ("t" + std::to_string(trial)) / ("m" + std::to_string(label) + ".csv");
        const std::string context = "participant " + std::to_string(participant) + ", trial " +
                                    std::to_string(trial) + ", motion " + std::to_string(label);
        Eigen::MatrixXd samples = parse_trial_csv(path, m.channels, context);
        if (!m.channel_subset.empty()) {
          Eigen::MatrixXd selected(static_cast<Eigen::Index>(m.channel_subset.size()),
                                   samples.cols());
          for (std::size_t i = 0; i < m.channel_subset.size(); ++i)
            selected.row(static_cast<Eigen::Index>(i)) = samples.row(m.channel_subset[i] - 1);
          samples = std::move(selected);
        }
        TrialRecording rec;
        rec.participant = participant;
        rec.trial = trial;
        rec.label = label;
        rec.recording.samples = std::move(samples);
        rec.recording.sample_rate_hz = m.sample_rate_hz;
        dataset.recordings.push_back(std::move(rec));
      }
    }
  }
  return dataset;
}

void write_dataset(const fs::path& root, const DatasetManifest& manifest,
                   const std::vector<TrialRecording>& recordings) {
  manifest.validate();
  fs::create_directories(root);
  std::ofstream manifest_out(root / "manifest.json");
  manifest_out << manifest.to_json().dump(2) << '\n';

  char buf[64];
  for (const TrialRecording& rec : recordings) {
    const fs::path dir =
        root / ("p" + std::to_string(rec.participant)) / ("t" + std::to_string(rec.trial));
    fs::create_directories(dir);
    std::ofstream out(dir / ("m" + std::to_string(rec.label) + ".csv"));
    const Eigen::MatrixXd& samples = rec.recording.samples;
    for (Eigen::Index t = 0; t < samples.cols(); ++t) {
      for (Eigen::Index ch = 0; ch < samples.rows(); ++ch) {
        std::snprintf(buf, sizeof(buf), "%.17g", samples(ch, t));
        if (ch > 0) out << ',';
        out << buf;
      }
      out << '\n';
    }
  }
}

}  // namespace emgcalib::harness
