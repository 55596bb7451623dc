#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "emgcalib/models.hpp"
#include "emgcalib/rng.hpp"

namespace emgcalib::models {

// Declarative classifier choice plus hyperparameters. Unset fields keep the
// defaults listed here.
struct ClassifierConfig {
  std::string name;  // llr | mlp | deep_mlp | lda | qda | smmc

  // smmc
  int components = 1;
  double nu = 0.1;
  double em_tol = 1e-8;
  int em_max_iter = 300;

  // llr
  double llr_weight_decay = 0.01;
  double llr_grad_tol = 1e-6;
  int llr_max_iter = 500;

  // mlp / deep_mlp
  double weight_decay = 1e-4;
  double learning_rate = 1e-3;
  int batch_size = 128;
  int epochs = 300;

  static ClassifierConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Uniform fit / predict-posterior contract for the six classifiers. Fitted
// models are immutable; predict_posterior is const and safe to call
// concurrently.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual const std::string& name() const = 0;
  virtual void fit(const LabeledSamples& train, Rng& rng) = 0;
  virtual PosteriorMatrix predict_posterior(const Eigen::MatrixXd& x) const = 0;
  // Versioned JSON document with full-precision decimal parameters.
  virtual nlohmann::json to_json() const = 0;
};

std::unique_ptr<Classifier> make_classifier(const ClassifierConfig& config);

// Rebuilds a fitted classifier from its serialized form.
std::unique_ptr<Classifier> classifier_from_json(const nlohmann::json& j);

}  // namespace emgcalib::models
