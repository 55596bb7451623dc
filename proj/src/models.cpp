#include "emgcalib/models.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>

namespace emgcalib::models {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // ln(2*pi)
}

void LabeledSamples::validate() const {
  if (features.rows() != static_cast<Eigen::Index>(labels.size()))
    throw std::invalid_argument("LabeledSamples: feature/label count mismatch");
  if (class_count < 1) throw std::invalid_argument("LabeledSamples: class_count must be >= 1");
  for (int y : labels)
    if (y < 0 || y >= class_count)
      throw std::invalid_argument("LabeledSamples: label " + std::to_string(y) +
                                  " outside {0.." + std::to_string(class_count - 1) + "}");
}

std::vector<Eigen::Index> LabeledSamples::class_counts() const {
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(class_count), 0);
  for (int y : labels) counts[static_cast<std::size_t>(y)] += 1;
  return counts;
}

void validate_posterior(const PosteriorMatrix& posterior, double tol) {
  const Eigen::MatrixXd& p = posterior.probs;
  if ((p.array() < -tol).any() || (p.array() > 1.0 + tol).any())
    throw std::invalid_argument("PosteriorMatrix: entries outside [0, 1]");
  const Eigen::VectorXd sums = p.rowwise().sum();
  if (((sums.array() - 1.0).abs() > tol).any())
    throw std::invalid_argument("PosteriorMatrix: rows must sum to 1");
}

double log_gaussian_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                            const Eigen::MatrixXd& sigma) {
  if (x.size() != mu.size() || sigma.rows() != x.size() || sigma.cols() != x.size())
    throw std::invalid_argument("log_gaussian_density: dimension mismatch");
  const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw ModelFitError("log_gaussian_density: covariance is not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  const Eigen::VectorXd z = l.triangularView<Eigen::Lower>().solve(x - mu);
  const double d = static_cast<double>(x.size());
  return -0.5 * d * kLog2Pi - 0.5 * log_det - 0.5 * z.squaredNorm();
}

double log_t_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                     const Eigen::MatrixXd& sigma, double nu) {
  if (!(nu > 0.0)) throw std::invalid_argument("log_t_density: nu must be positive");
  if (x.size() != mu.size() || sigma.rows() != x.size() || sigma.cols() != x.size())
    throw std::invalid_argument("log_t_density: dimension mismatch");
  const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw ModelFitError("log_t_density: scale matrix is not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  const Eigen::VectorXd z = l.triangularView<Eigen::Lower>().solve(x - mu);
  const double delta = z.squaredNorm();
  const double d = static_cast<double>(x.size());
  return std::lgamma(0.5 * (nu + d)) - std::lgamma(0.5 * nu) -
         0.5 * d * std::log(nu * std::numbers::pi) - 0.5 * log_det -
         0.5 * (nu + d) * std::log1p(delta / nu);
}

Eigen::MatrixXd regularize_spd(Eigen::MatrixXd sigma) {
  const Eigen::Index d = sigma.rows();
  if (Eigen::LLT<Eigen::MatrixXd>(sigma).info() == Eigen::Success) return sigma;
  const double base = sigma.trace() / static_cast<double>(d);
  for (double eps = 1e-6; eps <= 1e-2 + 1e-15; eps *= 10.0) {
    Eigen::MatrixXd candidate =
        sigma + eps * base * Eigen::MatrixXd::Identity(d, d);
    if (Eigen::LLT<Eigen::MatrixXd>(candidate).info() == Eigen::Success) return candidate;
  }
  throw ModelFitError("covariance matrix is degenerate beyond the regularization ladder");
}

namespace {

GaussianClassParams fit_gaussian(const LabeledSamples& data, bool shared) {
  data.validate();
  const auto counts = data.class_counts();
  for (int c = 0; c < data.class_count; ++c)
    if (counts[static_cast<std::size_t>(c)] < 2)
      throw ModelFitError("class " + std::to_string(c) +
                          " has fewer than 2 training samples; covariance not estimable");

  const Eigen::Index n = data.size();
  const int d = data.dim();
  const int c_count = data.class_count;

  GaussianClassParams params;
  params.shared_covariance = shared;
  params.means = Eigen::MatrixXd::Zero(c_count, d);
  params.log_priors.resize(c_count);

  for (Eigen::Index i = 0; i < n; ++i)
    params.means.row(data.labels[static_cast<std::size_t>(i)]) += data.features.row(i);
  for (int c = 0; c < c_count; ++c) {
    params.means.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
    params.log_priors[c] = std::log(static_cast<double>(counts[static_cast<std::size_t>(c)]) /
                                    static_cast<double>(n));
  }

  std::vector<Eigen::MatrixXd> scatter(static_cast<std::size_t>(c_count),
                                       Eigen::MatrixXd::Zero(d, d));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = data.labels[static_cast<std::size_t>(i)];
    const Eigen::VectorXd centered = data.features.row(i).transpose() - params.means.row(y).transpose();
    scatter[static_cast<std::size_t>(y)] += centered * centered.transpose();
  }

  if (shared) {
    Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(d, d);
    for (const auto& s : scatter) pooled += s;
    pooled /= static_cast<double>(n);  // maximum-likelihood normalization
    params.covariances.push_back(regularize_spd(std::move(pooled)));
  } else {
    for (int c = 0; c < c_count; ++c) {
      Eigen::MatrixXd cov =
          scatter[static_cast<std::size_t>(c)] / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      params.covariances.push_back(regularize_spd(std::move(cov)));
    }
  }
  return params;
}

}  // namespace

GaussianClassParams fit_lda(const LabeledSamples& data) { return fit_gaussian(data, true); }

GaussianClassParams fit_qda(const LabeledSamples& data) { return fit_gaussian(data, false); }

Eigen::MatrixXd log_densities(const GaussianClassParams& params, const Eigen::MatrixXd& x) {
  if (x.cols() != params.dim())
    throw std::invalid_argument("log_densities: feature dimension mismatch");
  const int c_count = params.class_count();
  Eigen::MatrixXd out(x.rows(), c_count);
  for (int c = 0; c < c_count; ++c) {
    const Eigen::MatrixXd& sigma = params.covariance_for(c);
    const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success)
      throw ModelFitError("log_densities: covariance is not positive definite");
    const Eigen::MatrixXd l = llt.matrixL();
    const double log_det = 2.0 * l.diagonal().array().log().sum();
    const double d = static_cast<double>(params.dim());
    const Eigen::MatrixXd centered = x.rowwise() - params.means.row(c);
    const Eigen::MatrixXd z =
        l.triangularView<Eigen::Lower>().solve(centered.transpose());
    const Eigen::VectorXd quad = z.colwise().squaredNorm().transpose();
    out.col(c) = Eigen::VectorXd::Constant(x.rows(), -0.5 * d * kLog2Pi - 0.5 * log_det) -
                 0.5 * quad;
  }
  return out;
}

PosteriorMatrix posterior_from_log_densities(const Eigen::MatrixXd& log_density,
                                             const Eigen::VectorXd& log_priors) {
  if (log_density.cols() != log_priors.size())
    throw std::invalid_argument("posterior_from_log_densities: class count mismatch");
  Eigen::MatrixXd joint = log_density.rowwise() + log_priors.transpose();
  const Eigen::VectorXd row_max = joint.rowwise().maxCoeff();
  joint.colwise() -= row_max;
  Eigen::MatrixXd expd = joint.array().exp();
  PosteriorMatrix posterior;
  posterior.probs = expd.array().colwise() / expd.rowwise().sum().array();
  return posterior;
}

PosteriorMatrix predict_generative(const GaussianClassParams& params, const Eigen::MatrixXd& x) {
  return posterior_from_log_densities(log_densities(params, x), params.log_priors);
}

Prediction predict_and_confidence(const PosteriorMatrix& posterior) {
  const Eigen::MatrixXd& p = posterior.probs;
  Prediction pred;
  pred.labels.resize(static_cast<std::size_t>(p.rows()));
  pred.confidence.resize(p.rows());
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    int best = 0;
    double best_p = p(i, 0);
    for (Eigen::Index c = 1; c < p.cols(); ++c) {
      if (p(i, c) > best_p) {  // strict: ties keep the lowest class index
        best_p = p(i, c);
        best = static_cast<int>(c);
      }
    }
    pred.labels[static_cast<std::size_t>(i)] = best;
    pred.confidence[i] = best_p;
  }
  return pred;
}

}  // namespace emgcalib::models
