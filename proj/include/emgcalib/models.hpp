#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace emgcalib::models {

// Raised when a model cannot be estimated from the data (degenerate
// covariance, collapsed mixture component, ...).
class ModelFitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Feature matrix with 0-based class labels. External file formats use 1-based
// motion labels; the harness shifts them on load.
struct LabeledSamples {
  Eigen::MatrixXd features;  // N x D
  std::vector<int> labels;   // values in {0, ..., class_count-1}
  int class_count = 0;

  Eigen::Index size() const { return features.rows(); }
  int dim() const { return static_cast<int>(features.cols()); }
  void validate() const;                    // shape and label-range checks
  std::vector<Eigen::Index> class_counts() const;
};

// N x C matrix of class posteriors; rows on the probability simplex.
struct PosteriorMatrix {
  Eigen::MatrixXd probs;

  Eigen::Index size() const { return probs.rows(); }
  int class_count() const { return static_cast<int>(probs.cols()); }
};

// Throws unless every entry is in [0,1] and each row sums to 1 within tol.
void validate_posterior(const PosteriorMatrix& posterior, double tol = 1e-9);

struct GaussianClassParams {
  Eigen::MatrixXd means;                     // C x D
  std::vector<Eigen::MatrixXd> covariances;  // one matrix if shared, else C
  bool shared_covariance = false;
  Eigen::VectorXd log_priors;                // C

  int class_count() const { return static_cast<int>(means.rows()); }
  int dim() const { return static_cast<int>(means.cols()); }
  const Eigen::MatrixXd& covariance_for(int c) const {
    return shared_covariance ? covariances.front() : covariances[static_cast<std::size_t>(c)];
  }
};

// log N(x | mu, sigma) evaluated through a Cholesky factorization.
double log_gaussian_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                            const Eigen::MatrixXd& sigma);

// log multivariate Student-t with scale matrix sigma and nu > 0 degrees of
// freedom (the closed form of the Normal x Inverse-Gamma scale mixture).
double log_t_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                     const Eigen::MatrixXd& sigma, double nu);

// Adds eps*(tr(sigma)/D)*I with eps escalating 1e-6 -> 1e-2 until the matrix
// admits a Cholesky factorization; throws ModelFitError if it never does.
Eigen::MatrixXd regularize_spd(Eigen::MatrixXd sigma);

// Gaussian classifier with one pooled maximum-likelihood covariance.
GaussianClassParams fit_lda(const LabeledSamples& data);

// Gaussian classifier with per-class maximum-likelihood covariances.
GaussianClassParams fit_qda(const LabeledSamples& data);

// Log class-conditional densities, one column per class.
Eigen::MatrixXd log_densities(const GaussianClassParams& params, const Eigen::MatrixXd& x);

// Bayes posteriors from per-sample log densities and log priors, normalized
// via log-sum-exp.
PosteriorMatrix posterior_from_log_densities(const Eigen::MatrixXd& log_density,
                                             const Eigen::VectorXd& log_priors);

PosteriorMatrix predict_generative(const GaussianClassParams& params, const Eigen::MatrixXd& x);

struct Prediction {
  std::vector<int> labels;      // argmax class, ties resolved to the lowest index
  Eigen::VectorXd confidence;   // max posterior per sample
};

Prediction predict_and_confidence(const PosteriorMatrix& posterior);

}  // namespace emgcalib::models
