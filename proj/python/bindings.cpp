// pybind11 surface over the core operations: feature extraction, the six
// classifiers, calibration metrics, synthetic oracles and the experiment
// runner.
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>

#include "emgcalib/calibration.hpp"
#include "emgcalib/classifier.hpp"
#include "emgcalib/experiment.hpp"
#include "emgcalib/models.hpp"
#include "emgcalib/nn.hpp"
#include "emgcalib/signal.hpp"
#include "emgcalib/synth.hpp"
#include "emgcalib/tmixture.hpp"

namespace py = pybind11;
using namespace emgcalib;

namespace {

models::LabeledSamples make_samples(const Eigen::MatrixXd& features,
                                    const std::vector<int>& labels, int class_count) {
  models::LabeledSamples data;
  data.features = features;
  data.labels = labels;
  data.class_count = class_count;
  data.validate();
  return data;
}

nlohmann::json json_from_str(const std::string& text) { return nlohmann::json::parse(text); }

}  // namespace

PYBIND11_MODULE(_emgcalib, m) {
  m.doc() = "EMG classifier calibration toolkit";

  // --- signal ---
  py::class_<signal::BiquadCoeffs>(m, "BiquadCoeffs")
      .def_readonly("b0", &signal::BiquadCoeffs::b0)
      .def_readonly("b1", &signal::BiquadCoeffs::b1)
      .def_readonly("b2", &signal::BiquadCoeffs::b2)
      .def_readonly("a1", &signal::BiquadCoeffs::a1)
      .def_readonly("a2", &signal::BiquadCoeffs::a2)
      .def("dc_gain", &signal::BiquadCoeffs::dc_gain)
      .def("is_stable", &signal::BiquadCoeffs::is_stable);

  m.def("design_butterworth2_lowpass", &signal::design_butterworth2_lowpass, py::arg("cutoff_hz"),
        py::arg("sample_rate_hz"));
  m.def(
      "filter_causal",
      [](const Eigen::VectorXd& x, const signal::BiquadCoeffs& c) {
        return signal::filter_causal(x, c);
      },
      py::arg("signal"), py::arg("coeffs"));
  m.def("magnitude_response", &signal::magnitude_response, py::arg("coeffs"), py::arg("freq_hz"),
        py::arg("sample_rate_hz"));
  m.def(
      "extract_features",
      [](const Eigen::MatrixXd& samples, double sample_rate_hz, double cutoff_hz, int stride,
         bool drop_transient) {
        signal::RawRecording rec;
        rec.samples = samples;
        rec.sample_rate_hz = sample_rate_hz;
        return signal::extract_features(rec, cutoff_hz, stride, drop_transient).features;
      },
      py::arg("samples"), py::arg("sample_rate_hz"), py::arg("cutoff_hz") = 2.0,
      py::arg("stride") = 1, py::arg("drop_transient") = false,
      "Rectify + low-pass each channel (rows) and return N x D features");

  // --- densities ---
  m.def("log_gaussian_density", &models::log_gaussian_density, py::arg("x"), py::arg("mean"),
        py::arg("covariance"));
  m.def("log_t_density", &models::log_t_density, py::arg("x"), py::arg("mean"), py::arg("scale"),
        py::arg("nu"));

  // --- classifiers ---
  py::class_<models::Classifier>(m, "Classifier")
      .def_property_readonly("name", &models::Classifier::name)
      .def(
          "fit",
          [](models::Classifier& self, const Eigen::MatrixXd& x, const std::vector<int>& y,
             int class_count, std::uint64_t seed) {
            Rng rng(seed);
            self.fit(make_samples(x, y, class_count), rng);
          },
          py::arg("features"), py::arg("labels"), py::arg("class_count"), py::arg("seed") = 0)
      .def(
          "predict_posterior",
          [](const models::Classifier& self, const Eigen::MatrixXd& x) {
            return self.predict_posterior(x).probs;
          },
          py::arg("features"))
      .def("to_json", [](const models::Classifier& self) { return self.to_json().dump(); });

  m.def(
      "make_classifier",
      [](const std::string& config_json) {
        return models::make_classifier(
            models::ClassifierConfig::from_json(json_from_str(config_json)));
      },
      py::arg("config_json"),
      "Build one of llr, mlp, deep_mlp, lda, qda, smmc from a JSON config string");
  m.def("classifier_from_json", [](const std::string& document) {
    return models::classifier_from_json(json_from_str(document));
  });

  m.def(
      "predict_and_confidence",
      [](const Eigen::MatrixXd& posterior) {
        models::PosteriorMatrix p;
        p.probs = posterior;
        const models::Prediction pred = models::predict_and_confidence(p);
        return py::make_tuple(pred.labels, pred.confidence);
      },
      py::arg("posterior"), "argmax labels (0-based) and max-posterior confidences");

  // --- calibration ---
  py::class_<calib::BinStats>(m, "BinStats")
      .def_readonly("index", &calib::BinStats::index)
      .def_readonly("count", &calib::BinStats::count)
      .def_readonly("accuracy", &calib::BinStats::accuracy)
      .def_readonly("confidence", &calib::BinStats::confidence);

  py::class_<calib::CalibrationReport>(m, "CalibrationReport")
      .def_readonly("bins", &calib::CalibrationReport::bins)
      .def_readonly("total", &calib::CalibrationReport::total)
      .def_readonly("ece", &calib::CalibrationReport::ece)
      .def_readonly("mce", &calib::CalibrationReport::mce)
      .def("csv", &calib::reliability_csv)
      .def("svg", &calib::reliability_svg, py::arg("title") = "reliability");

  m.def("bin_predictions", &calib::bin_predictions, py::arg("confidences"), py::arg("correct"),
        py::arg("bins") = 10);
  m.def("ece", &calib::ece, py::arg("bins"), py::arg("total"));
  m.def("mce", &calib::mce, py::arg("bins"));
  m.def("make_report", &calib::make_report, py::arg("confidences"), py::arg("correct"),
        py::arg("bins") = 10);

  // --- synth ---
  m.def(
      "synth_sample",
      [](const std::string& spec_json, int n) {
        const synth::SyntheticSpec spec = synth::SyntheticSpec::from_json(json_from_str(spec_json));
        const models::LabeledSamples data = synth::sample(spec, n);
        return py::make_tuple(data.features, data.labels);
      },
      py::arg("spec_json"), py::arg("n"));
  m.def(
      "synth_true_posterior",
      [](const std::string& spec_json, const Eigen::MatrixXd& x) {
        const synth::SyntheticSpec spec = synth::SyntheticSpec::from_json(json_from_str(spec_json));
        return synth::true_posterior(spec, x).probs;
      },
      py::arg("spec_json"), py::arg("x"));

  // --- harness ---
  m.def(
      "run_experiment",
      [](const std::string& config_path, const std::string& out_dir) {
        harness::ExperimentConfig config = harness::ExperimentConfig::from_file(config_path);
        if (!out_dir.empty()) config.output_dir = out_dir;
        const harness::ExperimentResult result = harness::run_experiment(config);
        harness::emit_report(result, config.output_dir);
        py::list rows;
        for (const auto& row : result.rows) {
          py::dict item;
          item["dataset"] = row.dataset;
          item["classifier"] = row.classifier;
          item["accuracy"] = row.accuracy;
          item["ece"] = row.ece;
          item["mce"] = row.mce;
          rows.append(item);
        }
        return rows;
      },
      py::arg("config_path"), py::arg("out_dir") = "",
      "Run an experiment config and emit the report; returns the metric rows");
}
