#include "emgcalib/synth.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/LU>

namespace emgcalib::synth {

void SyntheticSpec::validate() const {
  if (classes.empty()) throw std::invalid_argument("SyntheticSpec: needs at least one class");
  if (priors.size() != class_count())
    throw std::invalid_argument("SyntheticSpec: priors/class count mismatch");
  if ((priors.array() < 0.0).any() || std::abs(priors.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("SyntheticSpec: priors must lie on the simplex");
  const int d = dim();
  for (const ClassDistribution& c : classes) {
    if (c.mean.size() != d || c.covariance.rows() != d || c.covariance.cols() != d)
      throw std::invalid_argument("SyntheticSpec: inconsistent class dimensions");
    if (c.student_t && !(c.nu > 0.0))
      throw std::invalid_argument("SyntheticSpec: student_t classes need nu > 0");
    if (Eigen::LLT<Eigen::MatrixXd>(c.covariance).info() != Eigen::Success)
      throw std::invalid_argument("SyntheticSpec: covariance must be positive definite");
  }
  if (participants < 1 || trials < 1)
    throw std::invalid_argument("SyntheticSpec: participants and trials must be >= 1");
}

SyntheticSpec SyntheticSpec::from_json(const nlohmann::json& j) {
  SyntheticSpec spec;
  const auto& means = j.at("means");
  const auto& covs = j.at("covariances");
  const auto& families = j.at("families");
  if (means.size() != covs.size() || means.size() != families.size())
    throw std::invalid_argument("SyntheticSpec: means/covariances/families length mismatch");

  for (std::size_t c = 0; c < means.size(); ++c) {
    ClassDistribution dist;
    const auto& fam = families[c];
    const std::string type = fam.at("type").get<std::string>();
    if (type == "student_t") {
      dist.student_t = true;
      dist.nu = fam.at("nu").get<double>();
    } else if (type != "gaussian") {
      throw std::invalid_argument("SyntheticSpec: unknown family '" + type + "'");
    }
    const auto& mu = means[c];
    dist.mean.resize(static_cast<Eigen::Index>(mu.size()));
    for (std::size_t i = 0; i < mu.size(); ++i)
      dist.mean[static_cast<Eigen::Index>(i)] = mu[i].get<double>();
    const auto& cov = covs[c];
    dist.covariance.resize(static_cast<Eigen::Index>(cov.size()),
                           static_cast<Eigen::Index>(cov.size()));
    for (std::size_t r = 0; r < cov.size(); ++r)
      for (std::size_t k = 0; k < cov[r].size(); ++k)
        dist.covariance(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
            cov[r][k].get<double>();
    spec.classes.push_back(std::move(dist));
  }

  const auto& priors = j.at("priors");
  spec.priors.resize(static_cast<Eigen::Index>(priors.size()));
  for (std::size_t c = 0; c < priors.size(); ++c)
    spec.priors[static_cast<Eigen::Index>(c)] = priors[c].get<double>();

  spec.seed = j.value("seed", 0ULL);
  spec.participants = j.value("participants", 1);
  spec.trials = j.value("trials", 4);
  spec.validate();
  return spec;
}

nlohmann::json SyntheticSpec::to_json() const {
  nlohmann::json j;
  nlohmann::json families = nlohmann::json::array();
  nlohmann::json means = nlohmann::json::array();
  nlohmann::json covs = nlohmann::json::array();
  for (const ClassDistribution& c : classes) {
    nlohmann::json fam;
    fam["type"] = c.student_t ? "student_t" : "gaussian";
    if (c.student_t) fam["nu"] = c.nu;
    families.push_back(fam);
    means.push_back(std::vector<double>(c.mean.data(), c.mean.data() + c.mean.size()));
    nlohmann::json cov = nlohmann::json::array();
    for (Eigen::Index r = 0; r < c.covariance.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(c.covariance.cols()));
      for (Eigen::Index k = 0; k < c.covariance.cols(); ++k)
        row[static_cast<std::size_t>(k)] = c.covariance(r, k);
      cov.push_back(row);
    }
    covs.push_back(cov);
  }
  j["families"] = families;
  j["means"] = means;
  j["covariances"] = covs;
  j["priors"] = std::vector<double>(priors.data(), priors.data() + priors.size());
  j["seed"] = seed;
  j["participants"] = participants;
  j["trials"] = trials;
  return j;
}

Eigen::MatrixXd sample_class(const ClassDistribution& dist, int n, Rng& rng) {
  const Eigen::Index d = dist.mean.size();
  const Eigen::LLT<Eigen::MatrixXd> llt(dist.covariance);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("sample_class: covariance must be positive definite");
  const Eigen::MatrixXd l = llt.matrixL();

  Eigen::MatrixXd out(n, d);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd z = rng.normal_vector(d);
    double scale = 1.0;
    if (dist.student_t) scale = std::sqrt(rng.inverse_gamma(dist.nu / 2.0, dist.nu / 2.0));
    out.row(i) = (dist.mean + scale * (l * z)).transpose();
  }
  return out;
}

models::LabeledSamples sample(const SyntheticSpec& spec, int n, Rng& rng) {
  spec.validate();
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  models::LabeledSamples data;
  data.class_count = spec.class_count();
  data.features.resize(n, spec.dim());
  data.labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int y = rng.categorical(spec.priors);
    data.labels[static_cast<std::size_t>(i)] = y;
    data.features.row(i) =
        sample_class(spec.classes[static_cast<std::size_t>(y)], 1, rng).row(0);
  }
  return data;
}

models::LabeledSamples sample(const SyntheticSpec& spec, int n) {
  Rng rng = Rng::stream(spec.seed, {0});
  return sample(spec, n, rng);
}

namespace {

// Direct density evaluation via explicit inverse and determinant; kept
// deliberately separate from the classifiers' Cholesky-based code path.
double log_density_direct(const ClassDistribution& dist, const Eigen::VectorXd& x) {
  const double d = static_cast<double>(x.size());
  const Eigen::MatrixXd inv = dist.covariance.inverse();
  const double det = dist.covariance.determinant();
  const Eigen::VectorXd centered = x - dist.mean;
  const double delta = centered.dot(inv * centered);
  if (!dist.student_t)
    return -0.5 * d * std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det) - 0.5 * delta;
  const double nu = dist.nu;
  return std::lgamma(0.5 * (nu + d)) - std::lgamma(0.5 * nu) -
         0.5 * d * std::log(nu * std::numbers::pi) - 0.5 * std::log(det) -
         0.5 * (nu + d) * std::log1p(delta / nu);
}

}  // namespace

models::PosteriorMatrix true_posterior(const SyntheticSpec& spec, const Eigen::MatrixXd& x) {
  spec.validate();
  if (x.cols() != spec.dim()) throw std::invalid_argument("true_posterior: dimension mismatch");
  const int c_count = spec.class_count();
  models::PosteriorMatrix posterior;
  posterior.probs.resize(x.rows(), c_count);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::VectorXd log_joint(c_count);
    for (int c = 0; c < c_count; ++c)
      log_joint[c] = log_density_direct(spec.classes[static_cast<std::size_t>(c)],
                                        x.row(i).transpose()) +
                     std::log(spec.priors[c]);
    const double m = log_joint.maxCoeff();
    const Eigen::VectorXd expd = (log_joint.array() - m).exp();
    posterior.probs.row(i) = (expd / expd.sum()).transpose();
  }
  return posterior;
}

}  // namespace emgcalib::synth
