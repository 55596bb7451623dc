#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "emgcalib/optim.hpp"
#include "emgcalib/rng.hpp"

namespace emgcalib::nn {

// Row-wise softmax with max-shift stabilization.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

// Mean cross-entropy of softmax(logits) against integer labels (0-based).
// Writes d(loss)/d(logits) when dlogits is non-null.
double softmax_cross_entropy(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                             Eigen::MatrixXd* dlogits = nullptr);

// Feedforward classifier: Dense [-> BatchNorm] -> ReLU per hidden layer and a
// final Dense producing class logits. An empty hidden list gives the linear
// (logistic regression) model. Parameters are exposed as one flat vector so
// the same network plugs into Adam, L-BFGS and the finite-difference checker.
class FeedForward {
 public:
  FeedForward(int input_dim, const std::vector<int>& hidden, int output_dim, bool batch_norm,
              Rng& rng);

  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }
  bool has_batch_norm() const { return batch_norm_; }
  const std::vector<int>& hidden_dims() const { return hidden_dims_; }

  Eigen::Index param_count() const;
  Eigen::VectorXd params() const;
  void set_params(const Eigen::VectorXd& flat);

  // Inference-mode logits (batch norm uses running statistics).
  Eigen::MatrixXd logits(const Eigen::MatrixXd& x) const;

  // Mean softmax cross-entropy plus (decay/2)*||W||^2 over weight matrices
  // (biases and batch-norm parameters are not decayed). Fills the flat
  // gradient. Training mode uses batch statistics in batch-norm layers and
  // updates their running averages.
  double loss_and_grad(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                       double weight_decay, Eigen::VectorXd& grad, bool training = true);

  // Running statistics of batch-norm layers (empty when batch_norm is off);
  // used for serialization.
  std::vector<const optim::BatchNormState*> batchnorm_states() const;
  std::vector<optim::BatchNormState*> batchnorm_states();

 private:
  struct Layer {
    Eigen::MatrixXd weight;  // in x out
    Eigen::RowVectorXd bias;
    std::optional<optim::BatchNormState> bn;
  };

  int input_dim_ = 0;
  int output_dim_ = 0;
  bool batch_norm_ = false;
  std::vector<int> hidden_dims_;
  std::vector<Layer> layers_;  // hidden layers then the output layer
};

struct TrainTrace {
  std::vector<double> epoch_loss;  // mean cross-entropy + decay penalty per epoch
};

struct MlpTrainConfig {
  std::vector<int> hidden;
  bool batch_norm = false;
  double weight_decay = 1e-4;
  double learning_rate = 1e-3;
  int batch_size = 128;
  int epochs = 300;
};

// Mini-batch Adam training with per-epoch shuffling from the supplied stream.
// The last partial batch is kept; a singleton remainder is folded into the
// preceding batch when batch norm is on.
FeedForward fit_mlp_network(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                            int class_count, const MlpTrainConfig& config, Rng& rng,
                            TrainTrace* trace = nullptr);

struct LlrTrainConfig {
  double weight_decay = 0.01;
  double grad_tol = 1e-6;
  int max_iter = 500;
};

// Full-batch quasi-Newton training of the linear softmax model.
FeedForward fit_llr_network(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                            int class_count, const LlrTrainConfig& config);

}  // namespace emgcalib::nn
