#include "emgcalib/signal.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace emgcalib::signal {

void RawRecording::validate() const {
  if (!(sample_rate_hz > 0.0))
    throw std::invalid_argument("RawRecording: sample_rate_hz must be positive");
  if (samples.rows() < 1 || samples.cols() < 1)
    throw std::invalid_argument("RawRecording: needs at least one channel and one sample");
}

bool BiquadCoeffs::is_stable() const {
  // Roots of z^2 + a1 z + a2.
  const std::complex<double> disc = std::sqrt(std::complex<double>(a1 * a1 - 4.0 * a2, 0.0));
  const std::complex<double> r1 = (-a1 + disc) / 2.0;
  const std::complex<double> r2 = (-a1 - disc) / 2.0;
  return std::abs(r1) < 1.0 && std::abs(r2) < 1.0;
}

RawRecording rectify(const RawRecording& recording) {
  recording.validate();
  RawRecording out = recording;
  out.samples = recording.samples.cwiseAbs();
  return out;
}

BiquadCoeffs design_butterworth2_lowpass(double cutoff_hz, double sample_rate_hz) {
  if (!(sample_rate_hz > 0.0))
    throw std::invalid_argument("design_butterworth2_lowpass: sample rate must be positive");
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < sample_rate_hz / 2.0))
    throw std::invalid_argument(
        "design_butterworth2_lowpass: cutoff must lie strictly between 0 and Nyquist");
  const double k = std::tan(std::numbers::pi * cutoff_hz / sample_rate_hz);
  const double norm = 1.0 / (1.0 + std::numbers::sqrt2 * k + k * k);
  BiquadCoeffs c;
  c.a1 = 2.0 * (k * k - 1.0) * norm;
  c.a2 = (1.0 - std::numbers::sqrt2 * k + k * k) * norm;
  // b0 = k^2 * norm algebraically; dividing the realized denominator sum by 4
  // keeps the DC gain exactly 1 in floating point for every valid cutoff.
  c.b0 = (1.0 + c.a1 + c.a2) / 4.0;
  c.b1 = 2.0 * c.b0;
  c.b2 = c.b0;
  return c;
}

std::vector<double> filter_causal(std::span<const double> signal, const BiquadCoeffs& c) {
  std::vector<double> out(signal.size());
  double s1 = 0.0, s2 = 0.0;  // DF2T state, zero initial conditions
  for (std::size_t n = 0; n < signal.size(); ++n) {
    const double x = signal[n];
    const double y = c.b0 * x + s1;
    s1 = c.b1 * x - c.a1 * y + s2;
    s2 = c.b2 * x - c.a2 * y;
    out[n] = y;
  }
  return out;
}

Eigen::VectorXd filter_causal(const Eigen::VectorXd& signal, const BiquadCoeffs& c) {
  const auto filtered =
      filter_causal(std::span<const double>(signal.data(), static_cast<std::size_t>(signal.size())), c);
  return Eigen::Map<const Eigen::VectorXd>(filtered.data(), signal.size());
}

double magnitude_response(const BiquadCoeffs& c, double freq_hz, double sample_rate_hz) {
  const double omega = 2.0 * std::numbers::pi * freq_hz / sample_rate_hz;
  const std::complex<double> z1 = std::polar(1.0, -omega);
  const std::complex<double> z2 = z1 * z1;
  const std::complex<double> num = c.b0 + c.b1 * z1 + c.b2 * z2;
  const std::complex<double> den = 1.0 + c.a1 * z1 + c.a2 * z2;
  return std::abs(num / den);
}

Eigen::Index transient_length(double cutoff_hz, double sample_rate_hz) {
  return static_cast<Eigen::Index>(
      std::ceil(5.0 * sample_rate_hz / (2.0 * std::numbers::pi * cutoff_hz)));
}

FeatureSeries extract_features(const RawRecording& recording, double cutoff_hz, int stride,
                               bool drop_transient) {
  recording.validate();
  if (stride < 1) throw std::invalid_argument("extract_features: stride must be >= 1");
  const BiquadCoeffs coeffs = design_butterworth2_lowpass(cutoff_hz, recording.sample_rate_hz);

  const Eigen::Index channels = recording.samples.rows();
  const Eigen::Index total = recording.samples.cols();
  Eigen::Index start = 0;
  if (drop_transient) {
    start = std::min(transient_length(cutoff_hz, recording.sample_rate_hz), total - 1);
  }
  const Eigen::Index kept = (total - start + stride - 1) / stride;

  FeatureSeries out;
  out.stride = stride;
  out.features.resize(kept, channels);
  for (Eigen::Index ch = 0; ch < channels; ++ch) {
    const Eigen::VectorXd smoothed =
        filter_causal(recording.samples.row(ch).cwiseAbs().transpose(), coeffs);
    for (Eigen::Index i = 0; i < kept; ++i) out.features(i, ch) = smoothed[start + i * stride];
  }
  return out;
}

Standardizer fit_standardizer(const Eigen::MatrixXd& features) {
  if (features.rows() < 1) throw std::invalid_argument("fit_standardizer: empty feature matrix");
  Standardizer s;
  s.mean = features.colwise().mean();
  const Eigen::RowVectorXd var =
      (features.rowwise() - s.mean).array().square().colwise().mean();
  s.scale = var.array().sqrt().unaryExpr([](double sd) { return sd > 0.0 ? 1.0 / sd : 1.0; });
  return s;
}

Eigen::MatrixXd standardize(const Standardizer& stats, const Eigen::MatrixXd& features) {
  if (features.cols() != stats.mean.cols())
    throw std::invalid_argument("standardize: dimension mismatch");
  return (features.rowwise() - stats.mean).array().rowwise() * stats.scale.array();
}

}  // namespace emgcalib::signal
