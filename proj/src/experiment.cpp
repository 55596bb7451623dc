#include "emgcalib/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "emgcalib/signal.hpp"

namespace emgcalib::harness {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kFitPurpose = 0x666974ULL;  // classifier-training streams

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", value);
  return buf;
}

Eigen::MatrixXd features_for(const signal::RawRecording& recording, const FeatureConfig& cfg) {
  if (cfg.mode == "smoothed")
    return signal::extract_features(recording, cfg.cutoff_hz, cfg.stride, cfg.drop_transient)
        .features;
  if (cfg.mode == "identity") {
    const Eigen::MatrixXd full = recording.samples.transpose();  // T x D
    const Eigen::Index kept = (full.rows() + cfg.stride - 1) / cfg.stride;
    Eigen::MatrixXd out(kept, full.cols());
    for (Eigen::Index i = 0; i < kept; ++i) out.row(i) = full.row(i * cfg.stride);
    return out;
  }
  throw std::invalid_argument("FeatureConfig: unknown mode '" + cfg.mode + "'");
}

models::LabeledSamples assemble(const std::vector<const TrialRecording*>& recordings,
                                const std::set<int>& trials, const FeatureConfig& cfg,
                                int class_count) {
  std::vector<Eigen::MatrixXd> blocks;
  std::vector<int> labels;
  Eigen::Index total = 0;
  for (const TrialRecording* rec : recordings) {
    if (!trials.contains(rec->trial)) continue;
    Eigen::MatrixXd feats = features_for(rec->recording, cfg);
    total += feats.rows();
    for (Eigen::Index i = 0; i < feats.rows(); ++i) labels.push_back(rec->label - 1);
    blocks.push_back(std::move(feats));
  }
  models::LabeledSamples data;
  data.class_count = class_count;
  data.labels = std::move(labels);
  if (blocks.empty()) return data;
  data.features.resize(total, blocks.front().cols());
  Eigen::Index row = 0;
  for (const Eigen::MatrixXd& block : blocks) {
    data.features.middleRows(row, block.rows()) = block;
    row += block.rows();
  }
  return data;
}

// Display names stay unique when a classifier appears twice in the config.
std::vector<std::string> display_names(const std::vector<models::ClassifierConfig>& configs) {
  std::vector<std::string> names;
  std::map<std::string, int> seen;
  for (const auto& cfg : configs) {
    int& count = seen[cfg.name];
    count += 1;
    names.push_back(count == 1 ? cfg.name : cfg.name + "_" + std::to_string(count));
  }
  return names;
}

}  // namespace

FeatureConfig FeatureConfig::from_json(const nlohmann::json& j) {
  FeatureConfig c;
  c.mode = j.value("mode", c.mode);
  c.cutoff_hz = j.value("cutoff_hz", c.cutoff_hz);
  c.stride = j.value("stride", c.stride);
  c.drop_transient = j.value("drop_transient", c.drop_transient);
  c.standardize = j.value("standardize", c.standardize);
  if (c.mode != "smoothed" && c.mode != "identity")
    throw std::invalid_argument("FeatureConfig: unknown mode '" + c.mode + "'");
  if (c.stride < 1) throw std::invalid_argument("FeatureConfig: stride must be >= 1");
  return c;
}

nlohmann::json FeatureConfig::to_json() const {
  return {{"mode", mode},
          {"cutoff_hz", cutoff_hz},
          {"stride", stride},
          {"drop_transient", drop_transient},
          {"standardize", standardize}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.dataset_root = j.at("dataset").get<std::string>();
  for (const auto& item : j.at("classifiers"))
    c.classifiers.push_back(models::ClassifierConfig::from_json(item));
  if (j.contains("features")) c.features = FeatureConfig::from_json(j.at("features"));
  if (j.contains("training_trials"))
    c.training_trials = j.at("training_trials").get<std::vector<int>>();
  c.bins = j.value("bins", c.bins);
  c.seed = j.value("seed", c.seed);
  if (j.contains("output")) c.output_dir = j.at("output").get<std::string>();
  if (c.bins < 1) throw std::invalid_argument("ExperimentConfig: bins must be >= 1");
  if (c.classifiers.empty())
    throw std::invalid_argument("ExperimentConfig: classifier list is empty");
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path.string());
  nlohmann::json j;
  in >> j;
  return from_json(j);
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["dataset"] = dataset_root.string();
  nlohmann::json list = nlohmann::json::array();
  for (const auto& cfg : classifiers) list.push_back(cfg.to_json());
  j["classifiers"] = list;
  j["features"] = features.to_json();
  j["training_trials"] = training_trials;
  j["bins"] = bins;
  j["seed"] = seed;
  j["output"] = output_dir.string();
  return j;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const Dataset dataset = load_dataset(config.dataset_root);
  const DatasetManifest& manifest = dataset.manifest;

  const std::set<int> train_trials(config.training_trials.begin(), config.training_trials.end());
  const std::set<int> all_trials(manifest.trials.begin(), manifest.trials.end());
  for (int t : train_trials)
    if (!all_trials.contains(t))
      throw std::invalid_argument("ExperimentConfig: training trial " + std::to_string(t) +
                                  " not present in the dataset");
  std::set<int> test_trials;
  for (int t : manifest.trials)
    if (!train_trials.contains(t)) test_trials.insert(t);
  if (test_trials.empty())
    throw std::invalid_argument("ExperimentConfig: no trials left for testing");

  const std::vector<std::string> names = display_names(config.classifiers);

  ExperimentResult result;
  result.dataset_name = manifest.name;

  struct Accum {
    double accuracy = 0, ece = 0, mce = 0;
    int count = 0;
  };
  std::vector<Accum> accum(config.classifiers.size());

  for (int participant : manifest.participants) {
    const auto recordings = dataset.for_participant(participant);
    models::LabeledSamples train =
        assemble(recordings, train_trials, config.features, manifest.classes);
    models::LabeledSamples test =
        assemble(recordings, test_trials, config.features, manifest.classes);
    if (config.features.standardize) {
      const signal::Standardizer stats = signal::fit_standardizer(train.features);
      train.features = signal::standardize(stats, train.features);
      test.features = signal::standardize(stats, test.features);
    }

    for (std::size_t ci = 0; ci < config.classifiers.size(); ++ci) {
      // One stream per (purpose, classifier): participants with identical
      // data then produce identical cells.
      Rng rng = Rng::stream(config.seed, {kFitPurpose, static_cast<std::uint64_t>(ci)});
      try {
        auto model = models::make_classifier(config.classifiers[ci]);
        model->fit(train, rng);
        const models::PosteriorMatrix posterior = model->predict_posterior(test.features);
        const models::Prediction pred = models::predict_and_confidence(posterior);

        std::vector<double> confidences(pred.confidence.data(),
                                        pred.confidence.data() + pred.confidence.size());
        std::vector<bool> correct(static_cast<std::size_t>(test.size()));
        Eigen::Index hits = 0;
        for (Eigen::Index i = 0; i < test.size(); ++i) {
          const bool ok =
              pred.labels[static_cast<std::size_t>(i)] == test.labels[static_cast<std::size_t>(i)];
          correct[static_cast<std::size_t>(i)] = ok;
          if (ok) hits += 1;
        }

        CellResult cell;
        cell.participant = participant;
        cell.classifier = names[ci];
        cell.accuracy = static_cast<double>(hits) / static_cast<double>(test.size());
        cell.report = calib::make_report(confidences, correct, config.bins);
        cell.model = model->to_json();
        accum[ci].accuracy += cell.accuracy;
        accum[ci].ece += cell.report.ece;
        accum[ci].mce += cell.report.mce;
        accum[ci].count += 1;
        result.cells.push_back(std::move(cell));
      } catch (const std::exception& e) {
        result.failures.push_back({participant, names[ci], e.what()});
      }
    }
  }

  for (std::size_t ci = 0; ci < config.classifiers.size(); ++ci) {
    if (accum[ci].count == 0) continue;
    ResultRow row;
    row.dataset = manifest.name;
    row.classifier = names[ci];
    row.accuracy = accum[ci].accuracy / accum[ci].count;  // unweighted participant mean
    row.ece = accum[ci].ece / accum[ci].count;
    row.mce = accum[ci].mce / accum[ci].count;
    result.rows.push_back(std::move(row));
  }
  return result;
}

std::string metrics_csv(const std::vector<ResultRow>& rows) {
  // Best-per-dataset flags mirror the bold-font convention of results tables:
  // highest accuracy, lowest ECE, lowest MCE.
  std::map<std::string, ResultRow> best;
  for (const ResultRow& row : rows) {
    auto [it, inserted] = best.try_emplace(row.dataset, row);
    if (inserted) continue;
    it->second.accuracy = std::max(it->second.accuracy, row.accuracy);
    it->second.ece = std::min(it->second.ece, row.ece);
    it->second.mce = std::min(it->second.mce, row.mce);
  }
  std::string out = "dataset,classifier,accuracy,ece,mce,best_accuracy,best_ece,best_mce\n";
  for (const ResultRow& row : rows) {
    const ResultRow& b = best.at(row.dataset);
    out += row.dataset + ',' + row.classifier + ',' + format_double(row.accuracy) + ',' +
           format_double(row.ece) + ',' + format_double(row.mce) + ',' +
           (row.accuracy == b.accuracy ? "1" : "0") + ',' + (row.ece == b.ece ? "1" : "0") + ',' +
           (row.mce == b.mce ? "1" : "0") + '\n';
  }
  return out;
}

std::string scatter_csv(const std::vector<ResultRow>& rows) {
  std::string out = "dataset,classifier,accuracy,ece\n";
  for (const ResultRow& row : rows)
    out += row.dataset + ',' + row.classifier + ',' + format_double(row.accuracy) + ',' +
           format_double(row.ece) + '\n';
  return out;
}

std::string scatter_svg(const std::vector<ResultRow>& rows) {
  const double size = 420.0, margin = 55.0;
  const double plot = size - 2.0 * margin;
  double max_ece = 0.0;
  for (const ResultRow& row : rows) max_ece = std::max(max_ece, row.ece);
  const double x_span = std::max(0.05, max_ece * 1.15);
  auto xpos = [&](double ece_value) { return margin + ece_value / x_span * plot; };
  auto ypos = [&](double acc) { return size - margin - acc * plot; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_double(size) +
         "\" height=\"" + format_double(size) + "\" viewBox=\"0 0 " + format_double(size) + " " +
         format_double(size) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<line x1=\"" + format_double(margin) + "\" y1=\"" + format_double(size - margin) +
         "\" x2=\"" + format_double(size - margin) + "\" y2=\"" + format_double(size - margin) +
         "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + format_double(margin) + "\" y1=\"" + format_double(size - margin) +
         "\" x2=\"" + format_double(margin) + "\" y2=\"" + format_double(margin) +
         "\" stroke=\"black\"/>\n";
  svg += "<text x=\"" + format_double(size / 2) + "\" y=\"" + format_double(size - 14) +
         "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">ECE</text>\n";
  svg += "<text x=\"16\" y=\"" + format_double(size / 2) +
         "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\" "
         "transform=\"rotate(-90 16 " + format_double(size / 2) + ")\">accuracy</text>\n";
  for (const ResultRow& row : rows) {
    svg += "<circle cx=\"" + format_double(xpos(row.ece)) + "\" cy=\"" +
           format_double(ypos(row.accuracy)) + "\" r=\"4\" fill=\"#1f77b4\"/>\n";
    svg += "<text x=\"" + format_double(xpos(row.ece) + 6) + "\" y=\"" +
           format_double(ypos(row.accuracy) - 6) +
           "\" font-size=\"11\" font-family=\"sans-serif\">" + row.classifier + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void emit_report(const ExperimentResult& result, const fs::path& out_dir) {
  if (result.rows.empty() && result.cells.empty())
    throw std::invalid_argument("emit_report: nothing to report");
  fs::create_directories(out_dir);
  fs::create_directories(out_dir / "reliability");
  fs::create_directories(out_dir / "models");

  {
    std::ofstream out(out_dir / "metrics.csv");
    if (!out) throw std::runtime_error("emit_report: cannot write to " + out_dir.string());
    out << metrics_csv(result.rows);
  }
  {
    std::ofstream out(out_dir / "scatter.csv");
    out << scatter_csv(result.rows);
  }
  {
    std::ofstream out(out_dir / "scatter.svg");
    out << scatter_svg(result.rows);
  }
  for (const CellResult& cell : result.cells) {
    const std::string stem = "p" + std::to_string(cell.participant) + "_" + cell.classifier;
    {
      std::ofstream out(out_dir / "reliability" / (stem + ".csv"));
      out << calib::reliability_csv(cell.report);
    }
    {
      std::ofstream out(out_dir / "reliability" / (stem + ".svg"));
      out << calib::reliability_svg(cell.report, stem);
    }
    {
      std::ofstream out(out_dir / "models" / (stem + ".json"));
      out << cell.model.dump(2) << '\n';
    }
  }
  if (!result.failures.empty()) {
    std::ofstream out(out_dir / "failures.csv");
    out << "participant,classifier,error\n";
    for (const CellFailure& f : result.failures) {
      std::string message = f.message;
      std::replace(message.begin(), message.end(), ',', ';');
      std::replace(message.begin(), message.end(), '\n', ' ');
      out << f.participant << ',' << f.classifier << ',' << message << '\n';
    }
  }
}

}  // namespace emgcalib::harness
