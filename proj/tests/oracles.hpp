// Test-only oracles, kept independent of the library code paths they check.
#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

namespace oracles {

// Recursive adaptive Simpson quadrature.
inline double adaptive_simpson_step(const std::function<double(double)>& f, double a, double b,
                                    double fa, double fm, double fb, double whole, double tol,
                                    int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         adaptive_simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol, int max_depth = 50) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// Digital Butterworth coefficients derived the long way round: substitute
// s = (z - 1) / (K (z + 1)) into the analog prototype 1 / (s^2 + sqrt(2) s + 1)
// and expand the polynomials in z by convolution.
struct BiquadOracle {
  double b0, b1, b2, a1, a2;
};

inline BiquadOracle butterworth2_bilinear_oracle(double cutoff_hz, double sample_rate_hz) {
  const double k = std::tan(M_PI * cutoff_hz / sample_rate_hz);

  // Polynomials in z, ascending powers: (z+1) = {1, 1}, (z-1) = {-1, 1}.
  auto convolve = [](const std::vector<double>& p, const std::vector<double>& q) {
    std::vector<double> out(p.size() + q.size() - 1, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i)
      for (std::size_t j = 0; j < q.size(); ++j) out[i + j] += p[i] * q[j];
    return out;
  };
  const std::vector<double> zp1{1.0, 1.0};
  const std::vector<double> zm1{-1.0, 1.0};

  // Denominator: (z-1)^2 + sqrt(2) K (z-1)(z+1) + K^2 (z+1)^2.
  const auto zm1_sq = convolve(zm1, zm1);
  const auto cross = convolve(zm1, zp1);
  const auto zp1_sq = convolve(zp1, zp1);
  std::array<double, 3> den{}, num{};
  for (int i = 0; i < 3; ++i) {
    den[static_cast<std::size_t>(i)] = zm1_sq[static_cast<std::size_t>(i)] +
                                       std::sqrt(2.0) * k * cross[static_cast<std::size_t>(i)] +
                                       k * k * zp1_sq[static_cast<std::size_t>(i)];
    num[static_cast<std::size_t>(i)] = k * k * zp1_sq[static_cast<std::size_t>(i)];
  }
  // Normalize by the z^2 coefficient and convert to the {1, a1, a2} layout
  // (coefficients of z^0 are the trailing taps).
  const double lead = den[2];
  BiquadOracle out{};
  out.b0 = num[2] / lead;
  out.b1 = num[1] / lead;
  out.b2 = num[0] / lead;
  out.a1 = den[1] / lead;
  out.a2 = den[0] / lead;
  return out;
}

// Dense linear solve by Gaussian elimination with partial pivoting; used as
// the oracle for the quadratic-minimization test.
inline Eigen::VectorXd solve_by_elimination(Eigen::MatrixXd a, Eigen::VectorXd b) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || b.size() != n) throw std::invalid_argument("solve: shape mismatch");
  for (Eigen::Index col = 0; col < n; ++col) {
    Eigen::Index pivot = col;
    for (Eigen::Index row = col + 1; row < n; ++row)
      if (std::abs(a(row, col)) > std::abs(a(pivot, col))) pivot = row;
    if (a(pivot, col) == 0.0) throw std::invalid_argument("solve: singular matrix");
    a.row(col).swap(a.row(pivot));
    std::swap(b[col], b[pivot]);
    for (Eigen::Index row = col + 1; row < n; ++row) {
      const double factor = a(row, col) / a(col, col);
      a.row(row) -= factor * a.row(col);
      b[row] -= factor * b[col];
    }
  }
  Eigen::VectorXd x(n);
  for (Eigen::Index row = n - 1; row >= 0; --row) {
    double sum = b[row];
    for (Eigen::Index col = row + 1; col < n; ++col) sum -= a(row, col) * x[col];
    x[row] = sum / a(row, row);
  }
  return x;
}

// Log of the Normal x Inverse-Gamma integrand of the scale-mixture density,
// as a function of s = ln(u). Integrating exp(log_integrand(s)) over the real
// line gives the t density (the extra +s is the Jacobian of u = e^s).
inline double log_scale_mixture_integrand(double s, const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                                          double nu, double log_det_sigma, double mahalanobis) {
  const double d = static_cast<double>(x.size());
  const double u = std::exp(s);
  const double half_nu = 0.5 * nu;
  // ln N(x | mu, u Sigma)
  const double log_normal = -0.5 * d * std::log(2.0 * M_PI) - 0.5 * (log_det_sigma + d * s) -
                            0.5 * mahalanobis / u;
  // ln IG(u | nu/2, nu/2)
  const double log_ig = half_nu * std::log(half_nu) - std::lgamma(half_nu) -
                        (half_nu + 1.0) * s - half_nu / u;
  return log_normal + log_ig + s;
}

// ln Integral_0^inf N(x | mu, u Sigma) IG(u | nu/2, nu/2) du via adaptive
// Simpson on s = ln u, with the peak factored out for stability.
inline double log_t_density_by_quadrature(const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                                          const Eigen::MatrixXd& sigma, double nu) {
  // Plain determinant/quadratic form; small D only.
  const Eigen::MatrixXd inv = sigma.inverse();
  const double log_det = std::log(sigma.determinant());
  const Eigen::VectorXd centered = x - mu;
  const double mahalanobis = centered.dot(inv * centered);

  auto log_f = [&](double s) {
    return log_scale_mixture_integrand(s, x, mu, sigma, nu, log_det, mahalanobis);
  };
  // Locate the peak on a coarse grid.
  double peak = -std::numeric_limits<double>::infinity();
  for (double s = -80.0; s <= 80.0; s += 0.25) peak = std::max(peak, log_f(s));

  auto f = [&](double s) {
    const double v = log_f(s) - peak;
    return v < -745.0 ? 0.0 : std::exp(v);
  };
  const double integral = adaptive_simpson(f, -80.0, 80.0, 1e-12);
  return std::log(integral) + peak;
}

}  // namespace oracles
