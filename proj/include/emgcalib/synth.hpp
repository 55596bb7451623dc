#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include <json.hpp>

#include "emgcalib/models.hpp"
#include "emgcalib/rng.hpp"

namespace emgcalib::synth {

// Class-conditional sampling distribution: Gaussian, or Student-t realized as
// a Gaussian whose covariance is scaled by an inverse-gamma latent variable.
struct ClassDistribution {
  bool student_t = false;
  double nu = 0.0;            // degrees of freedom when student_t
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance; // SPD (scale matrix in the t case)
};

struct SyntheticSpec {
  std::vector<ClassDistribution> classes;
  Eigen::VectorXd priors;     // on the simplex
  std::uint64_t seed = 0;
  // Layout hints for dataset emission through the synth CLI.
  int participants = 1;
  int trials = 4;

  int class_count() const { return static_cast<int>(classes.size()); }
  int dim() const { return classes.empty() ? 0 : static_cast<int>(classes.front().mean.size()); }
  void validate() const;

  static SyntheticSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// n samples with labels drawn from the priors, features from the labeled
// class distribution. Uses the stream (seed, {0}).
models::LabeledSamples sample(const SyntheticSpec& spec, int n);
models::LabeledSamples sample(const SyntheticSpec& spec, int n, Rng& rng);

// n class-conditional draws.
Eigen::MatrixXd sample_class(const ClassDistribution& dist, int n, Rng& rng);

// Exact Bayes posteriors of the spec at the given points. Evaluated through
// explicit inverse/determinant arithmetic, independent of the Cholesky path
// used by the classifiers.
models::PosteriorMatrix true_posterior(const SyntheticSpec& spec, const Eigen::MatrixXd& x);

}  // namespace emgcalib::synth
