#include "emgcalib/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace emgcalib::nn {

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd shifted = logits.colwise() - logits.rowwise().maxCoeff();
  Eigen::MatrixXd expd = shifted.array().exp();
  return expd.array().colwise() / expd.rowwise().sum().array();
}

double softmax_cross_entropy(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                             Eigen::MatrixXd* dlogits) {
  const Eigen::Index n = logits.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw std::invalid_argument("softmax_cross_entropy: label count mismatch");

  const Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
  const Eigen::MatrixXd shifted = logits.colwise() - row_max;
  const Eigen::VectorXd lse = shifted.array().exp().rowwise().sum().log();

  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= logits.cols())
      throw std::invalid_argument("softmax_cross_entropy: label out of range");
    loss += lse[i] - shifted(i, y);
  }
  loss /= static_cast<double>(n);

  if (dlogits) {
    *dlogits = (shifted.colwise() - lse).array().exp();  // softmax probabilities
    for (Eigen::Index i = 0; i < n; ++i) (*dlogits)(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
    *dlogits /= static_cast<double>(n);
  }
  return loss;
}

FeedForward::FeedForward(int input_dim, const std::vector<int>& hidden, int output_dim,
                         bool batch_norm, Rng& rng)
    : input_dim_(input_dim), output_dim_(output_dim), batch_norm_(batch_norm),
      hidden_dims_(hidden) {
  if (input_dim < 1 || output_dim < 1)
    throw std::invalid_argument("FeedForward: dimensions must be positive");
  int fan_in = input_dim;
  for (int width : hidden) {
    if (width < 1) throw std::invalid_argument("FeedForward: hidden width must be positive");
    Layer layer;
    layer.weight = rng.normal_matrix(fan_in, width) * std::sqrt(2.0 / fan_in);  // He init
    layer.bias = Eigen::RowVectorXd::Zero(width);
    if (batch_norm) layer.bn = optim::BatchNormState::init(width);
    layers_.push_back(std::move(layer));
    fan_in = width;
  }
  Layer out;
  out.weight = rng.normal_matrix(fan_in, output_dim) * std::sqrt(2.0 / fan_in);
  out.bias = Eigen::RowVectorXd::Zero(output_dim);
  layers_.push_back(std::move(out));
}

Eigen::Index FeedForward::param_count() const {
  Eigen::Index count = 0;
  for (const Layer& layer : layers_) {
    count += layer.weight.size() + layer.bias.size();
    if (layer.bn) count += layer.bn->gamma.size() + layer.bn->beta.size();
  }
  return count;
}

Eigen::VectorXd FeedForward::params() const {
  Eigen::VectorXd flat(param_count());
  Eigen::Index pos = 0;
  for (const Layer& layer : layers_) {
    flat.segment(pos, layer.weight.size()) =
        Eigen::Map<const Eigen::VectorXd>(layer.weight.data(), layer.weight.size());
    pos += layer.weight.size();
    flat.segment(pos, layer.bias.size()) = layer.bias.transpose();
    pos += layer.bias.size();
    if (layer.bn) {
      flat.segment(pos, layer.bn->gamma.size()) = layer.bn->gamma.transpose();
      pos += layer.bn->gamma.size();
      flat.segment(pos, layer.bn->beta.size()) = layer.bn->beta.transpose();
      pos += layer.bn->beta.size();
    }
  }
  return flat;
}

void FeedForward::set_params(const Eigen::VectorXd& flat) {
  if (flat.size() != param_count())
    throw std::invalid_argument("FeedForward::set_params: size mismatch");
  Eigen::Index pos = 0;
  for (Layer& layer : layers_) {
    Eigen::Map<Eigen::VectorXd>(layer.weight.data(), layer.weight.size()) =
        flat.segment(pos, layer.weight.size());
    pos += layer.weight.size();
    layer.bias = flat.segment(pos, layer.bias.size()).transpose();
    pos += layer.bias.size();
    if (layer.bn) {
      layer.bn->gamma = flat.segment(pos, layer.bn->gamma.size()).transpose();
      pos += layer.bn->gamma.size();
      layer.bn->beta = flat.segment(pos, layer.bn->beta.size()).transpose();
      pos += layer.bn->beta.size();
    }
  }
}

Eigen::MatrixXd FeedForward::logits(const Eigen::MatrixXd& x) const {
  if (x.cols() != input_dim_) throw std::invalid_argument("FeedForward: input dimension mismatch");
  Eigen::MatrixXd act = x;
  for (std::size_t li = 0; li + 1 < layers_.size(); ++li) {
    const Layer& layer = layers_[li];
    Eigen::MatrixXd pre = (act * layer.weight).rowwise() + layer.bias;
    if (layer.bn) {
      auto bn = *layer.bn;  // copy: inference must not mutate state
      pre = optim::batchnorm_forward(pre, bn, /*training=*/false);
    }
    act = pre.cwiseMax(0.0);
  }
  const Layer& out = layers_.back();
  return (act * out.weight).rowwise() + out.bias;
}

double FeedForward::loss_and_grad(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                                  double weight_decay, Eigen::VectorXd& grad, bool training) {
  if (x.cols() != input_dim_) throw std::invalid_argument("FeedForward: input dimension mismatch");
  const std::size_t depth = layers_.size();

  // Forward pass, keeping what the backward pass needs.
  std::vector<Eigen::MatrixXd> inputs(depth);        // activation entering each layer
  std::vector<Eigen::MatrixXd> relu_out(depth - 1);  // post-ReLU output of hidden layers
  std::vector<optim::BatchNormCache> bn_caches(depth - 1);
  Eigen::MatrixXd act = x;
  for (std::size_t li = 0; li + 1 < depth; ++li) {
    Layer& layer = layers_[li];
    inputs[li] = act;
    Eigen::MatrixXd pre = (act * layer.weight).rowwise() + layer.bias;
    if (layer.bn)
      pre = optim::batchnorm_forward(pre, *layer.bn, training, &bn_caches[li]);
    relu_out[li] = pre.cwiseMax(0.0);
    act = relu_out[li];
  }
  inputs[depth - 1] = act;
  const Eigen::MatrixXd logits = (act * layers_.back().weight).rowwise() + layers_.back().bias;

  Eigen::MatrixXd delta;
  double loss = softmax_cross_entropy(logits, labels, &delta);

  // Backward pass into the flat gradient. Layout mirrors params().
  grad.resize(param_count());
  std::vector<Eigen::MatrixXd> dweight(depth);
  std::vector<Eigen::RowVectorXd> dbias(depth);
  std::vector<Eigen::RowVectorXd> dgamma(depth - 1), dbeta(depth - 1);

  for (int li = static_cast<int>(depth) - 1; li >= 0; --li) {
    Layer& layer = layers_[static_cast<std::size_t>(li)];
    dweight[static_cast<std::size_t>(li)] =
        inputs[static_cast<std::size_t>(li)].transpose() * delta;
    dbias[static_cast<std::size_t>(li)] = delta.colwise().sum();
    if (li > 0) {
      Eigen::MatrixXd dact = delta * layer.weight.transpose();
      const std::size_t hi = static_cast<std::size_t>(li - 1);
      // Through ReLU of the previous hidden layer.
      Eigen::MatrixXd dpre =
          (relu_out[hi].array() > 0.0).cast<double>() * dact.array();
      if (layers_[hi].bn)
        dpre = optim::batchnorm_backward(dpre, *layers_[hi].bn, bn_caches[hi], dgamma[hi],
                                         dbeta[hi]);
      delta = std::move(dpre);
    }
  }

  // Weight decay on weight matrices only.
  if (weight_decay != 0.0) {
    for (std::size_t li = 0; li < depth; ++li) {
      loss += 0.5 * weight_decay * layers_[li].weight.squaredNorm();
      dweight[li] += weight_decay * layers_[li].weight;
    }
  }

  Eigen::Index pos = 0;
  for (std::size_t li = 0; li < depth; ++li) {
    const Layer& layer = layers_[li];
    grad.segment(pos, layer.weight.size()) =
        Eigen::Map<const Eigen::VectorXd>(dweight[li].data(), dweight[li].size());
    pos += layer.weight.size();
    grad.segment(pos, layer.bias.size()) = dbias[li].transpose();
    pos += layer.bias.size();
    if (layer.bn) {
      grad.segment(pos, dgamma[li].size()) = dgamma[li].transpose();
      pos += dgamma[li].size();
      grad.segment(pos, dbeta[li].size()) = dbeta[li].transpose();
      pos += dbeta[li].size();
    }
  }
  return loss;
}

std::vector<const optim::BatchNormState*> FeedForward::batchnorm_states() const {
  std::vector<const optim::BatchNormState*> states;
  for (const Layer& layer : layers_)
    if (layer.bn) states.push_back(&*layer.bn);
  return states;
}

std::vector<optim::BatchNormState*> FeedForward::batchnorm_states() {
  std::vector<optim::BatchNormState*> states;
  for (Layer& layer : layers_)
    if (layer.bn) states.push_back(&*layer.bn);
  return states;
}

FeedForward fit_mlp_network(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                            int class_count, const MlpTrainConfig& config, Rng& rng,
                            TrainTrace* trace) {
  if (x.rows() < 1) throw std::invalid_argument("fit_mlp_network: empty training set");
  if (config.batch_size < 1 || config.epochs < 1)
    throw std::invalid_argument("fit_mlp_network: batch size and epochs must be positive");

  FeedForward net(static_cast<int>(x.cols()), config.hidden, class_count, config.batch_norm, rng);
  Eigen::VectorXd params = net.params();
  optim::AdamState adam = optim::AdamState::init(params.size(), config.learning_rate);
  Eigen::VectorXd grad(params.size());

  const Eigen::Index n = x.rows();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const std::vector<int> order = rng.permutation(static_cast<int>(n));
    double epoch_loss = 0.0;
    Eigen::Index start = 0;
    while (start < n) {
      Eigen::Index size = std::min<Eigen::Index>(config.batch_size, n - start);
      // Batch norm cannot normalize a singleton; extend the final batch instead.
      if (config.batch_norm && start + size < n && n - (start + size) == 1) size += 1;

      Eigen::MatrixXd bx(size, x.cols());
      std::vector<int> by(static_cast<std::size_t>(size));
      for (Eigen::Index i = 0; i < size; ++i) {
        const int src = order[static_cast<std::size_t>(start + i)];
        bx.row(i) = x.row(src);
        by[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(src)];
      }
      const double loss = net.loss_and_grad(bx, by, config.weight_decay, grad, /*training=*/true);
      if (!std::isfinite(loss))
        throw std::runtime_error("fit_mlp_network: non-finite loss at epoch " +
                                 std::to_string(epoch));
      adam_step(params, grad, adam);
      net.set_params(params);
      epoch_loss += loss * static_cast<double>(size);
      start += size;
    }
    if (trace) trace->epoch_loss.push_back(epoch_loss / static_cast<double>(n));
  }
  return net;
}

FeedForward fit_llr_network(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                            int class_count, const LlrTrainConfig& config) {
  if (x.rows() < 1) throw std::invalid_argument("fit_llr_network: empty training set");
  Rng init_rng(0);  // zero-parameter start below; the constructor draw is discarded
  FeedForward net(static_cast<int>(x.cols()), {}, class_count, /*batch_norm=*/false, init_rng);
  net.set_params(Eigen::VectorXd::Zero(net.param_count()));

  auto objective = [&](const Eigen::VectorXd& p, Eigen::VectorXd& g) {
    net.set_params(p);
    return net.loss_and_grad(x, labels, config.weight_decay, g, /*training=*/false);
  };
  const optim::MinimizeResult result =
      optim::quasi_newton_minimize(objective, net.params(), config.grad_tol, config.max_iter);
  net.set_params(result.point);
  return net;
}

}  // namespace emgcalib::nn
