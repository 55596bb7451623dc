#include "emgcalib/classifier.hpp"

#include <stdexcept>

#include "emgcalib/nn.hpp"
#include "emgcalib/tmixture.hpp"

namespace emgcalib::models {

namespace {

constexpr const char* kFormatTag = "emgcalib-model";
constexpr int kFormatVersion = 1;

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

nlohmann::json rowvector_to_json(const Eigen::RowVectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Eigen::RowVectorXd rowvector_from_json(const nlohmann::json& j) {
  return vector_from_json(j).transpose();
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return {};
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
  return m;
}

nlohmann::json document_header(const std::string& type) {
  nlohmann::json j;
  j["format"] = kFormatTag;
  j["version"] = kFormatVersion;
  j["type"] = type;
  return j;
}

void check_header(const nlohmann::json& j) {
  if (j.value("format", "") != kFormatTag)
    throw std::invalid_argument("classifier_from_json: not an emgcalib model document");
  if (j.value("version", 0) != kFormatVersion)
    throw std::invalid_argument("classifier_from_json: unsupported model version");
}

class GaussianClassifier : public Classifier {
 public:
  GaussianClassifier(std::string name, bool shared) : name_(std::move(name)), shared_(shared) {}

  const std::string& name() const override { return name_; }

  void fit(const LabeledSamples& train, Rng&) override {
    params_ = shared_ ? fit_lda(train) : fit_qda(train);
    fitted_ = true;
  }

  PosteriorMatrix predict_posterior(const Eigen::MatrixXd& x) const override {
    if (!fitted_) throw std::logic_error(name_ + ": predict before fit");
    return predict_generative(params_, x);
  }

  nlohmann::json to_json() const override {
    if (!fitted_) throw std::logic_error(name_ + ": serialize before fit");
    nlohmann::json j = document_header(name_);
    j["means"] = matrix_to_json(params_.means);
    nlohmann::json covs = nlohmann::json::array();
    for (const auto& cov : params_.covariances) covs.push_back(matrix_to_json(cov));
    j["covariances"] = covs;
    j["shared_covariance"] = params_.shared_covariance;
    j["log_priors"] = vector_to_json(params_.log_priors);
    return j;
  }

  void restore(const nlohmann::json& j) {
    params_.means = matrix_from_json(j.at("means"));
    params_.covariances.clear();
    for (const auto& cov : j.at("covariances")) params_.covariances.push_back(matrix_from_json(cov));
    params_.shared_covariance = j.at("shared_covariance").get<bool>();
    params_.log_priors = vector_from_json(j.at("log_priors"));
    fitted_ = true;
  }

 private:
  std::string name_;
  bool shared_;
  bool fitted_ = false;
  GaussianClassParams params_;
};

class SmmcClassifier : public Classifier {
 public:
  explicit SmmcClassifier(const ClassifierConfig& config) : config_(config) {}

  const std::string& name() const override { return kName; }

  void fit(const LabeledSamples& train, Rng& rng) override {
    SmmcOptions options;
    options.components = config_.components;
    options.nu = config_.nu;
    options.tol = config_.em_tol;
    options.max_iter = config_.em_max_iter;
    options.seed = rng.next();  // responsibilities stream for K > 1
    params_ = fit_smmc(train, options);
    fitted_ = true;
  }

  PosteriorMatrix predict_posterior(const Eigen::MatrixXd& x) const override {
    if (!fitted_) throw std::logic_error("smmc: predict before fit");
    return predict_generative(params_, x);
  }

  nlohmann::json to_json() const override {
    if (!fitted_) throw std::logic_error("smmc: serialize before fit");
    nlohmann::json j = document_header(kName);
    nlohmann::json classes = nlohmann::json::array();
    for (const auto& comps : params_.components) {
      nlohmann::json klist = nlohmann::json::array();
      for (const TComponent& comp : comps) {
        nlohmann::json ck;
        ck["weight"] = comp.weight;
        ck["mean"] = vector_to_json(comp.mean);
        ck["scale"] = matrix_to_json(comp.scale);
        klist.push_back(ck);
      }
      classes.push_back(klist);
    }
    j["classes"] = classes;
    j["nu"] = vector_to_json(params_.nu);
    j["log_priors"] = vector_to_json(params_.log_priors);
    return j;
  }

  void restore(const nlohmann::json& j) {
    params_.components.clear();
    for (const auto& klist : j.at("classes")) {
      std::vector<TComponent> comps;
      for (const auto& ck : klist) {
        TComponent comp;
        comp.weight = ck.at("weight").get<double>();
        comp.mean = vector_from_json(ck.at("mean"));
        comp.scale = matrix_from_json(ck.at("scale"));
        comps.push_back(std::move(comp));
      }
      params_.components.push_back(std::move(comps));
    }
    params_.nu = vector_from_json(j.at("nu"));
    params_.log_priors = vector_from_json(j.at("log_priors"));
    fitted_ = true;
  }

 private:
  inline static const std::string kName = "smmc";
  ClassifierConfig config_;
  bool fitted_ = false;
  TMixtureParams params_;
};

class NetworkClassifier : public Classifier {
 public:
  NetworkClassifier(std::string name, const ClassifierConfig& config)
      : name_(std::move(name)), config_(config) {}

  const std::string& name() const override { return name_; }

  void fit(const LabeledSamples& train, Rng& rng) override {
    train.validate();
    if (name_ == "llr") {
      nn::LlrTrainConfig cfg;
      cfg.weight_decay = config_.llr_weight_decay;
      cfg.grad_tol = config_.llr_grad_tol;
      cfg.max_iter = config_.llr_max_iter;
      net_.emplace(nn::fit_llr_network(train.features, train.labels, train.class_count, cfg));
    } else {
      nn::MlpTrainConfig cfg;
      cfg.hidden = name_ == "mlp" ? std::vector<int>{50} : std::vector<int>{100, 50, 25};
      cfg.batch_norm = name_ == "deep_mlp";
      cfg.weight_decay = config_.weight_decay;
      cfg.learning_rate = config_.learning_rate;
      cfg.batch_size = config_.batch_size;
      cfg.epochs = config_.epochs;
      net_.emplace(
          nn::fit_mlp_network(train.features, train.labels, train.class_count, cfg, rng));
    }
  }

  PosteriorMatrix predict_posterior(const Eigen::MatrixXd& x) const override {
    if (!net_) throw std::logic_error(name_ + ": predict before fit");
    PosteriorMatrix posterior;
    posterior.probs = nn::softmax_rows(net_->logits(x));
    return posterior;
  }

  nlohmann::json to_json() const override {
    if (!net_) throw std::logic_error(name_ + ": serialize before fit");
    nlohmann::json j = document_header(name_);
    j["input_dim"] = net_->input_dim();
    j["output_dim"] = net_->output_dim();
    j["hidden"] = net_->hidden_dims();
    j["batch_norm"] = net_->has_batch_norm();
    j["params"] = vector_to_json(net_->params());
    nlohmann::json bn = nlohmann::json::array();
    for (const auto* state : net_->batchnorm_states()) {
      nlohmann::json s;
      s["running_mean"] = rowvector_to_json(state->running_mean);
      s["running_var"] = rowvector_to_json(state->running_var);
      bn.push_back(s);
    }
    j["batch_norm_stats"] = bn;
    return j;
  }

  void restore(const nlohmann::json& j) {
    Rng scratch(0);
    net_.emplace(j.at("input_dim").get<int>(), j.at("hidden").get<std::vector<int>>(),
                 j.at("output_dim").get<int>(), j.at("batch_norm").get<bool>(), scratch);
    net_->set_params(vector_from_json(j.at("params")));
    const auto& bn = j.at("batch_norm_stats");
    auto states = net_->batchnorm_states();
    if (bn.size() != states.size())
      throw std::invalid_argument("classifier_from_json: batch-norm state count mismatch");
    for (std::size_t i = 0; i < states.size(); ++i) {
      states[i]->running_mean = rowvector_from_json(bn[i].at("running_mean"));
      states[i]->running_var = rowvector_from_json(bn[i].at("running_var"));
    }
  }

 private:
  std::string name_;
  ClassifierConfig config_;
  std::optional<nn::FeedForward> net_;
};

}  // namespace

ClassifierConfig ClassifierConfig::from_json(const nlohmann::json& j) {
  ClassifierConfig c;
  c.name = j.at("name").get<std::string>();
  c.components = j.value("components", c.components);
  c.nu = j.value("nu", c.nu);
  c.em_tol = j.value("em_tol", c.em_tol);
  c.em_max_iter = j.value("em_max_iter", c.em_max_iter);
  c.llr_weight_decay = j.value("llr_weight_decay", c.llr_weight_decay);
  c.llr_grad_tol = j.value("llr_grad_tol", c.llr_grad_tol);
  c.llr_max_iter = j.value("llr_max_iter", c.llr_max_iter);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  return c;
}

nlohmann::json ClassifierConfig::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  if (name == "smmc") {
    j["components"] = components;
    j["nu"] = nu;
    j["em_tol"] = em_tol;
    j["em_max_iter"] = em_max_iter;
  } else if (name == "llr") {
    j["llr_weight_decay"] = llr_weight_decay;
    j["llr_grad_tol"] = llr_grad_tol;
    j["llr_max_iter"] = llr_max_iter;
  } else if (name == "mlp" || name == "deep_mlp") {
    j["weight_decay"] = weight_decay;
    j["learning_rate"] = learning_rate;
    j["batch_size"] = batch_size;
    j["epochs"] = epochs;
  }
  return j;
}

std::unique_ptr<Classifier> make_classifier(const ClassifierConfig& config) {
  if (config.name == "lda") return std::make_unique<GaussianClassifier>("lda", true);
  if (config.name == "qda") return std::make_unique<GaussianClassifier>("qda", false);
  if (config.name == "smmc") return std::make_unique<SmmcClassifier>(config);
  if (config.name == "llr" || config.name == "mlp" || config.name == "deep_mlp")
    return std::make_unique<NetworkClassifier>(config.name, config);
  throw std::invalid_argument("make_classifier: unknown classifier '" + config.name + "'");
}

std::unique_ptr<Classifier> classifier_from_json(const nlohmann::json& j) {
  check_header(j);
  const std::string type = j.at("type").get<std::string>();
  if (type == "lda" || type == "qda") {
    auto model = std::make_unique<GaussianClassifier>(type, type == "lda");
    model->restore(j);
    return model;
  }
  if (type == "smmc") {
    auto model = std::make_unique<SmmcClassifier>(ClassifierConfig{.name = "smmc"});
    model->restore(j);
    return model;
  }
  if (type == "llr" || type == "mlp" || type == "deep_mlp") {
    auto model = std::make_unique<NetworkClassifier>(type, ClassifierConfig{.name = type});
    model->restore(j);
    return model;
  }
  throw std::invalid_argument("classifier_from_json: unknown model type '" + type + "'");
}

}  // namespace emgcalib::models
