#pragma once

#include <cstdint>

#include "aec/signal.hpp"

namespace aec {

struct ChirpParams {
  double sample_rate_hz = 30e6;
  double bandwidth_hz = 24e6;
  std::int64_t num_samples = 1000;
  double amplitude = 1.0;

  // Throws ConfigError naming the first violated invariant.
  void validate() const;

  double duration_s() const { return static_cast<double>(num_samples) / sample_rate_hz; }
  // Sweep rate k = B / (T/2).
  double slope_hz_per_s() const { return bandwidth_hz / (0.5 * duration_s()); }
  // Largest delay seen in training, 1% of the record.
  double max_training_delay_s() const { return 0.01 * duration_s(); }
  // Range corresponding to max_training_delay_s().
  double max_range_m() const { return kSpeedOfLight * max_training_delay_s() / 2.0; }
  // One FFT bin of the stretch-processed record in metres, c / (4 B).
  double range_bin_m() const { return kSpeedOfLight / (4.0 * bandwidth_hz); }

  bool operator==(const ChirpParams&) const = default;
};

// Triangular sweep: -B/2 -> +B/2 over the first half, back over the second.
IQSignal generate_cwlfm(const ChirpParams& params);

// Circular delay by a (possibly fractional) number of samples via a linear
// phase ramp in the frequency domain. Throws ArgumentError for negative delays.
IQSignal apply_delay(const IQSignal& sig, double delay_s);

// True when delay_s lies in the training range [0, 0.01 T]. apply_delay
// accepts larger values; callers can use this to flag them.
bool within_training_delay(const IQSignal& sig, double delay_s);

}  // namespace aec
