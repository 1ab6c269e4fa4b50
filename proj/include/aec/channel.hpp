#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aec/signal.hpp"

namespace aec {

struct FadingParams {
  // One-sided bandwidth of the envelope process as a fraction of the chirp
  // bandwidth.
  double relative_bandwidth = 0.1;
  double sigma = 0.3;

  void validate() const;
  bool operator==(const FadingParams&) const = default;
};

struct ToneSpec {
  double frequency_hz = 0.0;
  double sir_db = 0.0;
  double phase_rad = 0.0;
};

struct QpskSpec {
  double bandwidth_hz = 0.0;
  double center_hz = 0.0;
  double start_frac = 0.0;
  double duration_frac = 1.0;
  double sir_db = 0.0;
  double rolloff = 0.35;

  double symbol_rate_hz() const { return bandwidth_hz / (1.0 + rolloff); }
  // Throws ArgumentError.
  void validate(double sample_rate_hz) const;
};

struct NoiseParams {
  double snr_db = 0.0;
};

// Real zero-mean Gaussian process, white noise brick-wall low-passed to
// relative_bandwidth * chirp_bandwidth_hz and scaled to sample std sigma.
Eigen::ArrayXd fading_envelope(Eigen::Index n, double sample_rate_hz, const FadingParams& p,
                               double chirp_bandwidth_hz, std::uint64_t seed);

// sig * (1 + g), g from fading_envelope.
IQSignal apply_amplitude_fading(const IQSignal& sig, const FadingParams& p, double chirp_bandwidth_hz,
                                std::uint64_t seed);

// Circular complex Gaussian noise of power P_sig * 10^(-snr/10).
IQSignal add_awgn(const IQSignal& sig, const NoiseParams& p, std::uint64_t seed);

// Adds each tone with power reference_power * 10^(-sir/10).
IQSignal add_tones(const IQSignal& sig, std::span<const ToneSpec> tones, double reference_power);

// Gray-mapped QPSK, root-raised-cosine shaped, shifted to center_hz, gated to
// [start_frac, start_frac + duration_frac) of the record and scaled to
// reference_power * 10^(-sir/10) over its active span.
IQSignal add_qpsk(const IQSignal& sig, const QpskSpec& spec, double reference_power, std::uint64_t seed);

// The interference component that add_qpsk would add (zero outside the gate).
Eigen::ArrayXcd qpsk_waveform(Eigen::Index n, double sample_rate_hz, const QpskSpec& spec,
                              double reference_power, std::uint64_t seed);

// Root-raised-cosine impulse response at t symbol periods.
double rrc_pulse(double t, double rolloff);

// Root-raised-cosine taps with unit energy, `span` symbols either side.
Eigen::ArrayXd rrc_taps(double rolloff, double samples_per_symbol, int span);

// Tone frequencies on a deterministic grid: the centres of `count` equal
// slots across [-B/2, B/2].
std::vector<double> tone_grid(int count, double bandwidth_hz);

}  // namespace aec
