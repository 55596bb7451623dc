#pragma once

#include <functional>

#include <Eigen/Core>

namespace emgcalib::optim {

// Evaluates loss and writes the gradient at the given point.
using LossGrad = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct AdamState {
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  long step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState init(Eigen::Index size, double learning_rate);
};

// Bias-corrected Adam update, in place.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state);

struct MinimizeResult {
  Eigen::VectorXd point;
  double loss = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Limited-memory BFGS (memory 10) with Armijo backtracking. Stops when the
// sup-norm of the gradient drops to tol or after max_iter iterations.
// Throws std::runtime_error on non-finite loss values.
MinimizeResult quasi_newton_minimize(const LossGrad& loss_and_grad, Eigen::VectorXd init,
                                     double tol, int max_iter);

// Max relative error between the analytic gradient and centered finite
// differences: |analytic - numeric| / max(1, |numeric|) over coordinates.
double check_gradient(const LossGrad& loss_and_grad, const Eigen::VectorXd& point, double step);

struct BatchNormState {
  Eigen::RowVectorXd gamma;
  Eigen::RowVectorXd beta;
  Eigen::RowVectorXd running_mean;
  Eigen::RowVectorXd running_var;
  double momentum = 0.9;    // fraction of the old running average kept
  double epsilon = 1e-12;

  static BatchNormState init(Eigen::Index dim);
};

// Intermediates kept for the backward pass.
struct BatchNormCache {
  Eigen::MatrixXd centered;
  Eigen::MatrixXd normalized;
  Eigen::RowVectorXd inv_std;
};

// Training mode normalizes with batch statistics and updates the running
// averages; inference mode uses the running statistics. Training requires a
// batch of at least 2 rows.
Eigen::MatrixXd batchnorm_forward(const Eigen::MatrixXd& x, BatchNormState& state, bool training,
                                  BatchNormCache* cache = nullptr);

// Gradient wrt inputs; accumulates dgamma/dbeta.
Eigen::MatrixXd batchnorm_backward(const Eigen::MatrixXd& dy, const BatchNormState& state,
                                   const BatchNormCache& cache, Eigen::RowVectorXd& dgamma,
                                   Eigen::RowVectorXd& dbeta);

}  // namespace emgcalib::optim
