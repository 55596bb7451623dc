#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace emgcalib::signal {

// Multi-channel voltage-like recording, one row per channel.
struct RawRecording {
  Eigen::MatrixXd samples;  // channels x T
  double sample_rate_hz = 0.0;

  int channel_count() const { return static_cast<int>(samples.rows()); }
  Eigen::Index length() const { return samples.cols(); }
  void validate() const;  // throws std::invalid_argument
};

// Second-order IIR section, denominator normalized to a0 = 1.
struct BiquadCoeffs {
  double b0 = 0, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;

  double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }
  bool is_stable() const;  // both poles strictly inside the unit circle
};

// Smoothed-amplitude patterns, one row per retained time step.
struct FeatureSeries {
  Eigen::MatrixXd features;  // N x D
  int stride = 1;
};

// Full-wave rectification: every sample replaced by its absolute value.
RawRecording rectify(const RawRecording& recording);

// Bilinear-transform (prewarped) 2nd-order Butterworth low-pass.
// Requires 0 < cutoff_hz < sample_rate_hz / 2.
BiquadCoeffs design_butterworth2_lowpass(double cutoff_hz, double sample_rate_hz);

// Causal direct-form II transposed filtering from zero initial state.
std::vector<double> filter_causal(std::span<const double> signal, const BiquadCoeffs& coeffs);
Eigen::VectorXd filter_causal(const Eigen::VectorXd& signal, const BiquadCoeffs& coeffs);

// |H(e^{j 2 pi f / fs})| of the section.
double magnitude_response(const BiquadCoeffs& coeffs, double freq_hz, double sample_rate_hz);

// Settling span used when dropping startup transients: ceil(5 fs / (2 pi fc)).
Eigen::Index transient_length(double cutoff_hz, double sample_rate_hz);

// Rectify, low-pass each channel at cutoff_hz, optionally drop the startup
// transient, then keep every stride-th sample. Feature dim = channel count.
FeatureSeries extract_features(const RawRecording& recording, double cutoff_hz, int stride,
                               bool drop_transient = false);

// Optional per-dimension z-scoring with statistics taken from training data.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;  // 1 / std, constant dimensions left at 1
};

Standardizer fit_standardizer(const Eigen::MatrixXd& features);
Eigen::MatrixXd standardize(const Standardizer& stats, const Eigen::MatrixXd& features);

}  // namespace emgcalib::signal
