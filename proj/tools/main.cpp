// Command-line front end: run experiments, render reliability diagrams,
// generate synthetic datasets.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "emgcalib/dataset.hpp"
#include "emgcalib/experiment.hpp"
#include "emgcalib/synth.hpp"

namespace fs = std::filesystem;
using namespace emgcalib;

namespace {

int cmd_run(const std::string& config_path, const std::string& out_dir, long seed,
            const std::string& classifiers, int bins) {
  harness::ExperimentConfig config = harness::ExperimentConfig::from_file(config_path);
  if (!out_dir.empty()) config.output_dir = out_dir;
  if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);
  if (bins > 0) config.bins = bins;
  if (!classifiers.empty()) {
    std::vector<models::ClassifierConfig> selected;
    std::stringstream ss(classifiers);
    std::string token;
    while (std::getline(ss, token, ',')) {
      bool found = false;
      for (const auto& cfg : config.classifiers) {
        if (cfg.name == token) {
          selected.push_back(cfg);
          found = true;
          break;
        }
      }
      if (!found) {
        models::ClassifierConfig cfg;
        cfg.name = token;
        selected.push_back(cfg);  // defaults; make_classifier rejects unknown names
      }
    }
    config.classifiers = std::move(selected);
  }

  const harness::ExperimentResult result = harness::run_experiment(config);
  harness::emit_report(result, config.output_dir);

  std::printf("%-10s %-10s %9s %9s %9s\n", "dataset", "classifier", "accuracy", "ece", "mce");
  for (const auto& row : result.rows)
    std::printf("%-10s %-10s %9.4f %9.4f %9.4f\n", row.dataset.c_str(), row.classifier.c_str(),
                row.accuracy, row.ece, row.mce);
  for (const auto& failure : result.failures)
    std::fprintf(stderr, "fit failed: participant %d, %s: %s\n", failure.participant,
                 failure.classifier.c_str(), failure.message.c_str());
  std::printf("report written to %s\n", config.output_dir.string().c_str());
  return result.rows.empty() ? 1 : 0;
}

int cmd_diagram(const std::string& report_path, const std::string& out_path) {
  std::ifstream in(report_path);
  if (!in) {
    std::cerr << "cannot open " << report_path << "\n";
    return 1;
  }
  // Re-assemble a report from a reliability CSV.
  std::string line;
  std::getline(in, line);  // header
  calib::CalibrationReport report;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    calib::BinStats bin;
    double lower = 0, upper = 0, gap = 0;
    long count = 0;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%ld,%lf,%lf,%lf", &bin.index, &lower, &upper, &count,
                    &bin.accuracy, &bin.confidence, &gap) != 7) {
      std::cerr << "malformed reliability row: " << line << "\n";
      return 1;
    }
    bin.count = count;
    report.bins.push_back(bin);
    report.total += count;
  }
  if (report.bins.empty()) {
    std::cerr << "no bins in " << report_path << "\n";
    return 1;
  }
  report.ece = calib::ece(report.bins, report.total);
  report.mce = calib::mce(report.bins);

  std::ofstream out(out_path);
  out << calib::reliability_svg(report, fs::path(report_path).stem().string());
  std::cout << "diagram written to " << out_path << "\n";
  return 0;
}

int cmd_synth(const std::string& spec_path, int samples_per_motion, const std::string& out_dir) {
  std::ifstream in(spec_path);
  if (!in) {
    std::cerr << "cannot open " << spec_path << "\n";
    return 1;
  }
  nlohmann::json j;
  in >> j;
  const synth::SyntheticSpec spec = synth::SyntheticSpec::from_json(j);

  harness::DatasetManifest manifest;
  manifest.name = j.value("name", "synthetic");
  manifest.classes = spec.class_count();
  manifest.channels = spec.dim();
  manifest.sample_rate_hz = j.value("sample_rate_hz", 1.0);
  for (int p = 1; p <= spec.participants; ++p) manifest.participants.push_back(p);
  for (int t = 1; t <= spec.trials; ++t) manifest.trials.push_back(t);
  for (int c = 1; c <= spec.class_count(); ++c) manifest.labels.push_back(c);

  std::vector<harness::TrialRecording> recordings;
  for (int participant : manifest.participants) {
    for (int trial : manifest.trials) {
      for (int label : manifest.labels) {
        // One documented stream per (participant, trial, motion).
        Rng rng = Rng::stream(spec.seed,
                              {static_cast<std::uint64_t>(participant),
                               static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(label)});
        harness::TrialRecording rec;
        rec.participant = participant;
        rec.trial = trial;
        rec.label = label;
        rec.recording.sample_rate_hz = manifest.sample_rate_hz;
        rec.recording.samples =
            synth::sample_class(spec.classes[static_cast<std::size_t>(label - 1)],
                                samples_per_motion, rng)
                .transpose();
        recordings.push_back(std::move(rec));
      }
    }
  }
  harness::write_dataset(out_dir, manifest, recordings);
  std::cout << "synthetic dataset written to " << out_dir << " (" << manifest.participants.size()
            << " participants, " << manifest.trials.size() << " trials, " << samples_per_motion
            << " samples per motion)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EMG classifier calibration toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir, classifiers;
  long seed = -1;
  int bins = 0;
  auto* run = app.add_subcommand("run", "run a train/test experiment from a config file");
  run->add_option("--config", config_path, "experiment config JSON")->required();
  run->add_option("--out", out_dir, "output directory (overrides config)");
  run->add_option("--seed", seed, "seed override");
  run->add_option("--classifiers", classifiers, "comma-separated classifier subset");
  run->add_option("--bins", bins, "confidence bin count override");

  std::string report_path, svg_path;
  auto* diagram = app.add_subcommand("diagram", "render a reliability CSV as SVG");
  diagram->add_option("--report", report_path, "reliability CSV produced by run")->required();
  diagram->add_option("--out", svg_path, "output SVG path")->required();

  std::string spec_path, synth_out;
  int samples = 500;
  auto* synth_cmd = app.add_subcommand("synth", "generate a canonical dataset from a spec");
  synth_cmd->add_option("--spec", spec_path, "synthetic spec JSON")->required();
  synth_cmd->add_option("--n", samples, "samples per (trial, motion)");
  synth_cmd->add_option("--out", synth_out, "dataset output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, out_dir, seed, classifiers, bins);
    if (diagram->parsed()) return cmd_diagram(report_path, svg_path);
    if (synth_cmd->parsed()) return cmd_synth(spec_path, samples, synth_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
