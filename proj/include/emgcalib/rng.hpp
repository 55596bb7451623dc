#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

#include <Eigen/Core>

namespace emgcalib {

// Portable seeded generator: xoshiro256++ state expanded from the seed with
// splitmix64. All samplers below are explicit algorithms, so sequences are
// bit-identical across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Derives an independent stream from (seed, path...), e.g.
  // Rng::stream(seed, {participant, trial, purpose}).
  static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

  std::uint64_t next();

  // Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi);

  // Standard normal via Box-Muller (two uniforms per draw, no cached spare).
  double normal();

  // Gamma(shape, scale 1) via Marsaglia-Tsang; shape < 1 handled by boosting.
  double gamma(double shape);

  // Inverse gamma with shape a and scale b: b / Gamma(a).
  double inverse_gamma(double shape, double scale);

  // Index drawn from a discrete distribution (weights must sum to ~1).
  int categorical(const Eigen::VectorXd& probs);

  // Fisher-Yates permutation of {0, ..., n-1}.
  std::vector<int> permutation(int n);

  Eigen::VectorXd normal_vector(Eigen::Index n);
  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);

 private:
  std::uint64_t state_[4];
};

}  // namespace emgcalib
