#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "emgcalib/rng.hpp"
#include "emgcalib/signal.hpp"
#include "oracles.hpp"

using namespace emgcalib;
using signal::BiquadCoeffs;
using signal::RawRecording;

namespace {

RawRecording make_recording(const Eigen::MatrixXd& samples, double fs) {
  RawRecording rec;
  rec.samples = samples;
  rec.sample_rate_hz = fs;
  return rec;
}

}  // namespace

TEST_CASE("rectify replaces samples by absolute values") {
  Eigen::MatrixXd samples(1, 3);
  samples << -1.0, 2.0, 0.0;
  const RawRecording out = signal::rectify(make_recording(samples, 100.0));
  CHECK(out.samples(0, 0) == 1.0);
  CHECK(out.samples(0, 1) == 2.0);
  CHECK(out.samples(0, 2) == 0.0);
  CHECK(out.sample_rate_hz == 100.0);
}

TEST_CASE("rectify is the identity on nonnegative input and idempotent") {
  Rng rng(11);
  Eigen::MatrixXd samples = rng.normal_matrix(3, 64);
  const RawRecording rec = make_recording(samples, 1000.0);
  const RawRecording once = signal::rectify(rec);
  const RawRecording twice = signal::rectify(once);
  CHECK((once.samples.array() >= 0.0).all());
  CHECK((twice.samples - once.samples).cwiseAbs().maxCoeff() == 0.0);

  const RawRecording nonneg = signal::rectify(make_recording(samples.cwiseAbs(), 1000.0));
  CHECK((nonneg.samples - samples.cwiseAbs()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("butterworth design: DC gain is exactly 1 across valid parameters") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const double fs = rng.uniform(10.0, 20000.0);
    const double fc = rng.uniform(1e-3, 0.499) * fs;
    const BiquadCoeffs c = signal::design_butterworth2_lowpass(fc, fs);
    CHECK(std::abs(c.dc_gain() - 1.0) < 1e-12);
    CHECK(c.is_stable());
  }
}

TEST_CASE("butterworth design: cutoff magnitude is the -3 dB point") {
  const BiquadCoeffs c = signal::design_butterworth2_lowpass(2.0, 4000.0);
  CHECK(std::abs(c.dc_gain() - 1.0) < 1e-12);
  CHECK(signal::magnitude_response(c, 2.0, 4000.0) == doctest::Approx(0.70711).epsilon(1e-3));
}

TEST_CASE("butterworth design matches the bilinear-transform oracle") {
  // Includes the 5120 Hz case of the highest-rate dataset shape.
  for (const auto& [fc, fs] : {std::pair{2.0, 5120.0}, std::pair{2.0, 4000.0},
                               std::pair{35.0, 512.0}, std::pair{400.0, 44100.0}}) {
    const BiquadCoeffs c = signal::design_butterworth2_lowpass(fc, fs);
    const oracles::BiquadOracle o = oracles::butterworth2_bilinear_oracle(fc, fs);
    CHECK(std::abs(c.b0 - o.b0) < 1e-12);
    CHECK(std::abs(c.b1 - o.b1) < 1e-12);
    CHECK(std::abs(c.b2 - o.b2) < 1e-12);
    CHECK(std::abs(c.a1 - o.a1) < 1e-12);
    CHECK(std::abs(c.a2 - o.a2) < 1e-12);
  }
}

TEST_CASE("butterworth design rejects cutoffs at or above Nyquist") {
  CHECK_THROWS_AS(signal::design_butterworth2_lowpass(2000.0, 4000.0), std::invalid_argument);
  CHECK_THROWS_AS(signal::design_butterworth2_lowpass(2100.0, 4000.0), std::invalid_argument);
  CHECK_THROWS_AS(signal::design_butterworth2_lowpass(0.0, 4000.0), std::invalid_argument);
  CHECK_THROWS_AS(signal::design_butterworth2_lowpass(-1.0, 4000.0), std::invalid_argument);
}

TEST_CASE("causal filter: impulse, constant and zero inputs") {
  const BiquadCoeffs c = signal::design_butterworth2_lowpass(50.0, 1000.0);

  Eigen::VectorXd impulse = Eigen::VectorXd::Zero(8);
  impulse[0] = 1.0;
  const Eigen::VectorXd h = signal::filter_causal(impulse, c);
  CHECK(h[0] == doctest::Approx(c.b0).epsilon(1e-15));

  // Constant input converges to the same constant (DC gain 1). Simulate until
  // the relative change drops below 1e-12.
  const double constant = 3.7;
  Eigen::VectorXd level = Eigen::VectorXd::Constant(4000, constant);
  const Eigen::VectorXd y = signal::filter_causal(level, c);
  double last_change = 1.0;
  for (Eigen::Index i = y.size() - 10; i < y.size() - 1; ++i)
    last_change = std::abs(y[i + 1] - y[i]) / constant;
  CHECK(last_change < 1e-12);
  CHECK(std::abs(y[y.size() - 1] - constant) < 1e-9);

  const Eigen::VectorXd zeros = signal::filter_causal(Eigen::VectorXd::Zero(64), c);
  CHECK(zeros.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("extract_features: stride 1 keeps every sample; stride decimates") {
  Rng rng(3);
  const RawRecording rec = make_recording(rng.normal_matrix(2, 500), 1000.0);
  const auto full = signal::extract_features(rec, 5.0, 1);
  CHECK(full.features.rows() == 500);
  CHECK(full.features.cols() == 2);
  const auto strided = signal::extract_features(rec, 5.0, 7);
  CHECK(strided.features.rows() == (500 + 6) / 7);
  // Decimated rows are exactly the stride-th rows of the full series.
  for (Eigen::Index i = 0; i < strided.features.rows(); ++i)
    CHECK((strided.features.row(i) - full.features.row(i * 7)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("extract_features: rectified sinusoid settles near its mean amplitude") {
  const double fs = 2000.0, f0 = 50.0, amplitude = 1.5;
  const Eigen::Index n = 8000;  // 4 s
  Eigen::MatrixXd samples(1, n);
  for (Eigen::Index i = 0; i < n; ++i)
    samples(0, i) =
        amplitude * std::sin(2.0 * std::numbers::pi * f0 * static_cast<double>(i) / fs);
  const auto features = signal::extract_features(make_recording(samples, fs), 2.0, 1);
  const double expected = 2.0 * amplitude / std::numbers::pi;  // mean of |A sin|

  // Oracle cross-check: mean of the rectified samples over whole periods (the
  // discrete mean carries an O(1/n^2) sampling bias against 2A/pi).
  const double rectified_mean = samples.cwiseAbs().mean();
  CHECK(rectified_mean == doctest::Approx(expected).epsilon(1e-2));

  for (Eigen::Index i = n / 2; i < n; i += 100)
    CHECK(features.features(i, 0) == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("extract_features: identical channels give identical feature columns") {
  Rng rng(9);
  Eigen::MatrixXd one = rng.normal_matrix(1, 300);
  Eigen::MatrixXd both(2, 300);
  both.row(0) = one.row(0);
  both.row(1) = one.row(0);
  const auto features = signal::extract_features(make_recording(both, 1000.0), 2.0, 1);
  CHECK((features.features.col(0) - features.features.col(1)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("extract_features commutes with channel permutation") {
  Rng rng(13);
  const Eigen::MatrixXd samples = rng.normal_matrix(4, 256);
  const std::vector<int> perm{2, 0, 3, 1};
  Eigen::MatrixXd permuted(4, 256);
  for (int ch = 0; ch < 4; ++ch)
    permuted.row(ch) = samples.row(perm[static_cast<std::size_t>(ch)]);

  const auto base = signal::extract_features(make_recording(samples, 1000.0), 3.0, 2);
  const auto shuffled = signal::extract_features(make_recording(permuted, 1000.0), 3.0, 2);
  for (int ch = 0; ch < 4; ++ch)
    CHECK((shuffled.features.col(ch) - base.features.col(perm[static_cast<std::size_t>(ch)]))
              .cwiseAbs()
              .maxCoeff() == 0.0);
}

TEST_CASE("smoothed rectified signals are nonnegative past the transient") {
  Rng rng(21);
  const double fs = 1000.0, fc = 2.0;
  const Eigen::Index settle = signal::transient_length(fc, fs);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd noise = rng.normal_matrix(1, 4000);
    const auto features = signal::extract_features(make_recording(noise, fs), fc, 1);
    for (Eigen::Index i = settle; i < features.features.rows(); ++i)
      CHECK(features.features(i, 0) >= 0.0);
  }
}

TEST_CASE("drop_transient removes the settling span") {
  Rng rng(5);
  const RawRecording rec = make_recording(rng.normal_matrix(1, 3000), 1000.0);
  const auto kept = signal::extract_features(rec, 2.0, 1, false);
  const auto dropped = signal::extract_features(rec, 2.0, 1, true);
  const Eigen::Index settle = signal::transient_length(2.0, 1000.0);
  CHECK(dropped.features.rows() == kept.features.rows() - settle);
  CHECK((dropped.features.col(0) - kept.features.col(0).tail(dropped.features.rows()))
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("standardizer centers and scales with training statistics") {
  Rng rng(17);
  Eigen::MatrixXd features = rng.normal_matrix(400, 3);
  features.col(1) *= 5.0;
  features.col(2).array() += 10.0;
  const auto stats = signal::fit_standardizer(features);
  const Eigen::MatrixXd z = signal::standardize(stats, features);
  CHECK(z.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::RowVectorXd var = z.array().square().colwise().mean();
  CHECK((var.array() - 1.0).abs().maxCoeff() < 1e-9);
}
