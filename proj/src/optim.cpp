#include "emgcalib/optim.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>
#include <string>

namespace emgcalib::optim {

AdamState AdamState::init(Eigen::Index size, double learning_rate) {
  AdamState s;
  s.first_moment = Eigen::VectorXd::Zero(size);
  s.second_moment = Eigen::VectorXd::Zero(size);
  s.learning_rate = learning_rate;
  return s;
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size())
    throw std::invalid_argument("adam_step: parameter/gradient/state shape mismatch");
  state.step += 1;
  state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * grads;
  state.second_moment =
      state.beta2 * state.second_moment.array() + (1.0 - state.beta2) * grads.array().square();
  const double bias1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  params.array() -= state.learning_rate * (state.first_moment.array() / bias1) /
                    ((state.second_moment.array() / bias2).sqrt() + state.epsilon);
}

MinimizeResult quasi_newton_minimize(const LossGrad& loss_and_grad, Eigen::VectorXd x, double tol,
                                     int max_iter) {
  constexpr int kMemory = 10;
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxBacktracks = 60;

  Eigen::VectorXd g(x.size());
  double fx = loss_and_grad(x, g);
  if (!std::isfinite(fx))
    throw std::runtime_error("quasi_newton_minimize: non-finite loss at the initial point");

  struct Pair {
    Eigen::VectorXd s, y;
    double rho;
  };
  std::deque<Pair> history;

  MinimizeResult result;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() <= tol) break;

    // Two-loop recursion for the search direction.
    Eigen::VectorXd q = g;
    std::vector<double> alpha(history.size());
    for (int i = static_cast<int>(history.size()) - 1; i >= 0; --i) {
      alpha[static_cast<std::size_t>(i)] =
          history[static_cast<std::size_t>(i)].rho * history[static_cast<std::size_t>(i)].s.dot(q);
      q -= alpha[static_cast<std::size_t>(i)] * history[static_cast<std::size_t>(i)].y;
    }
    if (!history.empty()) {
      const Pair& last = history.back();
      q *= last.s.dot(last.y) / last.y.squaredNorm();
    }
    for (std::size_t i = 0; i < history.size(); ++i) {
      const double beta = history[i].rho * history[i].y.dot(q);
      q += (alpha[i] - beta) * history[i].s;
    }
    Eigen::VectorXd direction = -q;
    double slope = g.dot(direction);
    if (!(slope < 0.0)) {  // not a descent direction, fall back to steepest descent
      direction = -g;
      slope = -g.squaredNorm();
    }

    double step = 1.0;
    Eigen::VectorXd x_new(x.size()), g_new(x.size());
    double f_new = fx;
    bool accepted = false;
    for (int bt = 0; bt < kMaxBacktracks; ++bt) {
      x_new = x + step * direction;
      f_new = loss_and_grad(x_new, g_new);
      if (!std::isfinite(f_new))
        throw std::runtime_error("quasi_newton_minimize: non-finite loss at iteration " +
                                 std::to_string(iter));
      if (f_new <= fx + kArmijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // step underflow; current point is the answer

    Eigen::VectorXd s = x_new - x;
    Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      history.push_back({std::move(s), std::move(y), 1.0 / sy});
      if (history.size() > kMemory) history.pop_front();
    } else {
      // Armijo backtracking does not enforce the curvature condition; stale
      // pairs would freeze the model, so restart from steepest descent.
      history.clear();
    }
    x = std::move(x_new);
    g = std::move(g_new);
    fx = f_new;
  }

  result.point = std::move(x);
  result.loss = fx;
  result.iterations = iter;
  result.converged = g.lpNorm<Eigen::Infinity>() <= tol;
  return result;
}

double check_gradient(const LossGrad& loss_and_grad, const Eigen::VectorXd& point, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("check_gradient: step must be positive");
  Eigen::VectorXd analytic(point.size());
  loss_and_grad(point, analytic);

  Eigen::VectorXd x = point;
  Eigen::VectorXd scratch(point.size());
  double max_rel = 0.0;
  for (Eigen::Index i = 0; i < point.size(); ++i) {
    x[i] = point[i] + step;
    const double f_plus = loss_and_grad(x, scratch);
    x[i] = point[i] - step;
    const double f_minus = loss_and_grad(x, scratch);
    x[i] = point[i];
    const double numeric = (f_plus - f_minus) / (2.0 * step);
    const double rel = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(numeric));
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

BatchNormState BatchNormState::init(Eigen::Index dim) {
  BatchNormState s;
  s.gamma = Eigen::RowVectorXd::Ones(dim);
  s.beta = Eigen::RowVectorXd::Zero(dim);
  s.running_mean = Eigen::RowVectorXd::Zero(dim);
  s.running_var = Eigen::RowVectorXd::Ones(dim);
  return s;
}

Eigen::MatrixXd batchnorm_forward(const Eigen::MatrixXd& x, BatchNormState& state, bool training,
                                  BatchNormCache* cache) {
  if (x.cols() != state.gamma.cols())
    throw std::invalid_argument("batchnorm_forward: feature dimension mismatch");

  Eigen::RowVectorXd mean, var;
  if (training) {
    if (x.rows() < 2)
      throw std::invalid_argument("batchnorm_forward: training mode needs a batch of >= 2");
    mean = x.colwise().mean();
    var = (x.rowwise() - mean).array().square().colwise().mean();
    state.running_mean = state.momentum * state.running_mean + (1.0 - state.momentum) * mean;
    state.running_var = state.momentum * state.running_var + (1.0 - state.momentum) * var;
  } else {
    mean = state.running_mean;
    var = state.running_var;
  }

  const Eigen::RowVectorXd inv_std = (var.array() + state.epsilon).rsqrt();
  Eigen::MatrixXd centered = x.rowwise() - mean;
  Eigen::MatrixXd normalized = centered.array().rowwise() * inv_std.array();
  Eigen::MatrixXd out =
      (normalized.array().rowwise() * state.gamma.array()).rowwise() + state.beta.array();
  if (cache) {
    cache->centered = std::move(centered);
    cache->normalized = std::move(normalized);
    cache->inv_std = inv_std;
  }
  return out;
}

Eigen::MatrixXd batchnorm_backward(const Eigen::MatrixXd& dy, const BatchNormState& state,
                                   const BatchNormCache& cache, Eigen::RowVectorXd& dgamma,
                                   Eigen::RowVectorXd& dbeta) {
  const double batch = static_cast<double>(dy.rows());
  dgamma = (dy.array() * cache.normalized.array()).colwise().sum();
  dbeta = dy.colwise().sum();

  const Eigen::MatrixXd dxhat = dy.array().rowwise() * state.gamma.array();
  const Eigen::RowVectorXd sum_dxhat_centered =
      (dxhat.array() * cache.centered.array()).colwise().sum();
  const Eigen::RowVectorXd dvar =
      sum_dxhat_centered.array() * (-0.5) * cache.inv_std.array().cube();
  const Eigen::RowVectorXd sum_dxhat = dxhat.colwise().sum();
  const Eigen::RowVectorXd sum_centered = cache.centered.colwise().sum();
  const Eigen::RowVectorXd dmean = (-(sum_dxhat.array() * cache.inv_std.array()) +
                                    dvar.array() * (-2.0 / batch) * sum_centered.array())
                                       .matrix();

  Eigen::MatrixXd dx = dxhat.array().rowwise() * cache.inv_std.array();
  dx += (cache.centered.array().rowwise() * ((2.0 / batch) * dvar.array())).matrix();
  dx.rowwise() += dmean / batch;
  return dx;
}

}  // namespace emgcalib::optim
