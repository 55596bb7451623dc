#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "emgcalib/models.hpp"

namespace emgcalib::models {

// One multivariate Student-t mixture component.
struct TComponent {
  double weight = 1.0;       // mixing coefficient
  Eigen::VectorXd mean;
  Eigen::MatrixXd scale;     // SPD scale matrix
};

// Class-conditional t mixtures sharing one fixed degrees-of-freedom value per
// class. The latent variance scale of the Normal x Inverse-Gamma construction
// is integrated out analytically; it surfaces only through the EM weights.
struct TMixtureParams {
  std::vector<std::vector<TComponent>> components;  // per class
  Eigen::VectorXd nu;                               // per class, > 0
  Eigen::VectorXd log_priors;

  int class_count() const { return static_cast<int>(components.size()); }
  int dim() const { return components.empty() || components.front().empty()
                        ? 0
                        : static_cast<int>(components.front().front().mean.size()); }
};

struct SmmcOptions {
  int components = 1;       // K per class
  double nu = 0.1;          // fixed, shared across a class's components
  double tol = 1e-8;        // relative log-likelihood change
  int max_iter = 300;
  std::uint64_t seed = 0;   // responsibilities init for K > 1
};

// Per-class log-likelihood after every EM iteration (for monotonicity checks).
struct EmTrace {
  std::vector<std::vector<double>> log_likelihood;  // [class][iteration]
};

// Fits one t mixture per class by EM with fixed nu. K = 1 starts from the
// class mean and ML covariance; K > 1 from seeded random responsibilities.
TMixtureParams fit_smmc(const LabeledSamples& data, const SmmcOptions& options,
                        EmTrace* trace = nullptr);

// Log mixture densities, one column per class.
Eigen::MatrixXd log_densities(const TMixtureParams& params, const Eigen::MatrixXd& x);

PosteriorMatrix predict_generative(const TMixtureParams& params, const Eigen::MatrixXd& x);

}  // namespace emgcalib::models
