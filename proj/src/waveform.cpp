#include "aec/waveform.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "aec/errors.hpp"
#include "aec/fft.hpp"

namespace aec {

void ChirpParams::validate() const {
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz))
    throw ConfigError("chirp: sample_rate_hz must be positive and finite");
  if (!(bandwidth_hz > 0.0))
    throw ConfigError("chirp: bandwidth_hz must be positive");
  if (!(bandwidth_hz < sample_rate_hz))
    throw ConfigError("chirp: bandwidth_hz must be below sample_rate_hz (complex Nyquist), got " +
                      std::to_string(bandwidth_hz) + " >= " + std::to_string(sample_rate_hz));
  if (num_samples <= 0)
    throw ConfigError("chirp: num_samples must be positive");
  if (num_samples % 2 != 0)
    throw ConfigError("chirp: num_samples must be even, got " + std::to_string(num_samples));
  if (num_samples % 8 != 0)
    throw ConfigError("chirp: num_samples must be divisible by 8, got " + std::to_string(num_samples));
  if (!(amplitude > 0.0) || !std::isfinite(amplitude))
    throw ConfigError("chirp: amplitude must be positive and finite");
}

IQSignal generate_cwlfm(const ChirpParams& params) {
  params.validate();
  const Eigen::Index n = params.num_samples;
  const Eigen::Index half = n / 2;
  const double dt = 1.0 / params.sample_rate_hz;
  const double b = params.bandwidth_hz;
  const double k = params.slope_hz_per_s();
  constexpr double two_pi = 2.0 * std::numbers::pi;

  Eigen::ArrayXcd x(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double phase;
    if (i < half) {
      const double t = static_cast<double>(i) * dt;
      phase = two_pi * (-0.5 * b * t + 0.5 * k * t * t);
    } else {
      // The up-sweep phase returns to zero at T/2, so restarting from zero
      // keeps the phase continuous.
      const double t = static_cast<double>(i - half) * dt;
      phase = two_pi * (0.5 * b * t - 0.5 * k * t * t);
    }
    x[i] = params.amplitude * std::polar(1.0, phase);
  }
  return from_double(x, params.sample_rate_hz);
}

IQSignal apply_delay(const IQSignal& sig, double delay_s) {
  sig.validate();
  if (!(delay_s >= 0.0) || !std::isfinite(delay_s))
    throw ArgumentError("apply_delay: delay must be a non-negative finite value, got " + std::to_string(delay_s));
  if (delay_s == 0.0) return sig;

  const Eigen::Index n = sig.size();
  Eigen::ArrayXcd spectrum = fft(to_double(sig));
  for (Eigen::Index m = 0; m < n; ++m) {
    const double f = bin_frequency(m, n, sig.sample_rate_hz);
    spectrum[m] *= std::polar(1.0, -2.0 * std::numbers::pi * f * delay_s);
  }
  // For even n the Nyquist bin has no signed partner; its ramp is kept so that
  // integer delays are exact circular shifts.
  return from_double(ifft(spectrum), sig.sample_rate_hz);
}

bool within_training_delay(const IQSignal& sig, double delay_s) {
  return delay_s >= 0.0 && delay_s <= 0.01 * sig.duration_s() * (1.0 + 1e-12);
}

}  // namespace aec
