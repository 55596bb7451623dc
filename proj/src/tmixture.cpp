#include "emgcalib/tmixture.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>

#include "emgcalib/rng.hpp"

namespace emgcalib::models {

namespace {

// log t density and squared Mahalanobis distances for a block of points.
struct ComponentEval {
  Eigen::VectorXd log_density;
  Eigen::VectorXd mahalanobis;
};

ComponentEval evaluate_component(const TComponent& comp, double nu, const Eigen::MatrixXd& x) {
  const Eigen::LLT<Eigen::MatrixXd> llt(comp.scale);
  if (llt.info() != Eigen::Success)
    throw ModelFitError("t-mixture component scale is not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  const double d = static_cast<double>(x.cols());
  const double constant = std::lgamma(0.5 * (nu + d)) - std::lgamma(0.5 * nu) -
                          0.5 * d * std::log(nu * std::numbers::pi) - 0.5 * log_det;

  const Eigen::MatrixXd centered = x.rowwise() - comp.mean.transpose();
  const Eigen::MatrixXd z = l.triangularView<Eigen::Lower>().solve(centered.transpose());

  ComponentEval eval;
  eval.mahalanobis = z.colwise().squaredNorm().transpose();
  eval.log_density =
      (constant - 0.5 * (nu + d) * (eval.mahalanobis.array() / nu).log1p()).matrix();
  return eval;
}

// EM for one class. Returns the fitted components; appends the per-iteration
// log-likelihood to trace when given.
std::vector<TComponent> fit_class_mixture(const Eigen::MatrixXd& x, const SmmcOptions& options,
                                          int class_index, std::vector<double>* trace) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  const int k_count = options.components;
  const double nu = options.nu;

  // Initialization.
  std::vector<TComponent> comps(static_cast<std::size_t>(k_count));
  Eigen::MatrixXd resp(n, k_count);
  if (k_count == 1) {
    TComponent& c = comps[0];
    c.weight = 1.0;
    c.mean = x.colwise().mean().transpose();
    const Eigen::MatrixXd centered = x.rowwise() - c.mean.transpose();
    c.scale = regularize_spd((centered.transpose() * centered) / static_cast<double>(n));
    resp.setOnes();
  } else {
    Rng rng = Rng::stream(options.seed, {0x736d6d63ULL, static_cast<std::uint64_t>(class_index)});
    for (Eigen::Index i = 0; i < n; ++i) {
      double total = 0.0;
      for (int k = 0; k < k_count; ++k) {
        resp(i, k) = 0.1 + rng.uniform();
        total += resp(i, k);
      }
      resp.row(i) /= total;
    }
    // First M-step from the random responsibilities with unit latent weights.
    for (int k = 0; k < k_count; ++k) {
      TComponent& c = comps[static_cast<std::size_t>(k)];
      const double rk = resp.col(k).sum();
      c.weight = rk / static_cast<double>(n);
      c.mean = (x.transpose() * resp.col(k)) / rk;
      const Eigen::MatrixXd centered = x.rowwise() - c.mean.transpose();
      c.scale = regularize_spd(
          (centered.transpose() * (centered.array().colwise() * resp.col(k).array()).matrix()) /
          rk);
    }
  }

  double prev_ll = -std::numeric_limits<double>::infinity();
  Eigen::MatrixXd latent_weight(n, k_count);
  for (int iter = 0; iter < options.max_iter; ++iter) {
    // E-step.
    Eigen::MatrixXd log_resp(n, k_count);
    for (int k = 0; k < k_count; ++k) {
      const TComponent& c = comps[static_cast<std::size_t>(k)];
      const ComponentEval eval = evaluate_component(c, nu, x);
      log_resp.col(k) = eval.log_density.array() + std::log(c.weight);
      latent_weight.col(k) =
          (nu + static_cast<double>(d)) / (nu + eval.mahalanobis.array());
    }
    const Eigen::VectorXd row_max = log_resp.rowwise().maxCoeff();
    const Eigen::MatrixXd shifted = (log_resp.colwise() - row_max).array().exp();
    const Eigen::VectorXd row_sum = shifted.rowwise().sum();
    resp = shifted.array().colwise() / row_sum.array();
    const double ll = (row_sum.array().log() + row_max.array()).sum();
    if (trace) trace->push_back(ll);

    const double rel_change = std::abs(ll - prev_ll) / std::max(1.0, std::abs(prev_ll));
    if (iter > 0 && rel_change < options.tol) break;
    prev_ll = ll;

    // M-step.
    for (int k = 0; k < k_count; ++k) {
      TComponent& c = comps[static_cast<std::size_t>(k)];
      const Eigen::VectorXd r = resp.col(k);
      const Eigen::VectorXd rw = r.array() * latent_weight.col(k).array();
      const double r_sum = r.sum();
      const double rw_sum = rw.sum();
      if (!(r_sum > 0.0) || !(rw_sum > 0.0))
        throw ModelFitError("t-mixture component collapsed (zero responsibility mass)");
      c.weight = r_sum / static_cast<double>(n);
      c.mean = (x.transpose() * rw) / rw_sum;
      const Eigen::MatrixXd centered = x.rowwise() - c.mean.transpose();
      c.scale = regularize_spd(
          (centered.transpose() * (centered.array().colwise() * rw.array()).matrix()) / r_sum);
    }
  }
  return comps;
}

}  // namespace

TMixtureParams fit_smmc(const LabeledSamples& data, const SmmcOptions& options, EmTrace* trace) {
  data.validate();
  if (options.components < 1) throw std::invalid_argument("fit_smmc: K must be >= 1");
  if (!(options.nu > 0.0)) throw std::invalid_argument("fit_smmc: nu must be positive");
  if (options.max_iter < 1) throw std::invalid_argument("fit_smmc: max_iter must be >= 1");

  const auto counts = data.class_counts();
  for (int c = 0; c < data.class_count; ++c)
    if (counts[static_cast<std::size_t>(c)] < 2)
      throw ModelFitError("class " + std::to_string(c) +
                          " has fewer than 2 training samples; scale matrix not estimable");

  TMixtureParams params;
  params.components.resize(static_cast<std::size_t>(data.class_count));
  params.nu = Eigen::VectorXd::Constant(data.class_count, options.nu);
  params.log_priors.resize(data.class_count);
  if (trace) trace->log_likelihood.assign(static_cast<std::size_t>(data.class_count), {});

  for (int c = 0; c < data.class_count; ++c) {
    const Eigen::Index nc = counts[static_cast<std::size_t>(c)];
    Eigen::MatrixXd xc(nc, data.dim());
    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < data.size(); ++i)
      if (data.labels[static_cast<std::size_t>(i)] == c) xc.row(row++) = data.features.row(i);

    params.log_priors[c] =
        std::log(static_cast<double>(nc) / static_cast<double>(data.size()));
    params.components[static_cast<std::size_t>(c)] = fit_class_mixture(
        xc, options, c, trace ? &trace->log_likelihood[static_cast<std::size_t>(c)] : nullptr);
  }
  return params;
}

Eigen::MatrixXd log_densities(const TMixtureParams& params, const Eigen::MatrixXd& x) {
  if (x.cols() != params.dim())
    throw std::invalid_argument("log_densities: feature dimension mismatch");
  const int c_count = params.class_count();
  Eigen::MatrixXd out(x.rows(), c_count);
  for (int c = 0; c < c_count; ++c) {
    const auto& comps = params.components[static_cast<std::size_t>(c)];
    Eigen::MatrixXd log_terms(x.rows(), static_cast<Eigen::Index>(comps.size()));
    for (std::size_t k = 0; k < comps.size(); ++k) {
      const ComponentEval eval = evaluate_component(comps[k], params.nu[c], x);
      log_terms.col(static_cast<Eigen::Index>(k)) =
          eval.log_density.array() + std::log(comps[k].weight);
    }
    const Eigen::VectorXd row_max = log_terms.rowwise().maxCoeff();
    out.col(c) = ((log_terms.colwise() - row_max).array().exp().rowwise().sum().log() +
                  row_max.array())
                     .matrix();
  }
  return out;
}

PosteriorMatrix predict_generative(const TMixtureParams& params, const Eigen::MatrixXd& x) {
  return posterior_from_log_densities(log_densities(params, x), params.log_priors);
}

}  // namespace emgcalib::models
