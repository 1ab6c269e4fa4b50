#pragma once

#include <filesystem>

#include "aec/signal.hpp"
#include "aec/waveform.hpp"

namespace aec {

enum class Window { rectangular, hann };

// Magnitude spectrum of the dechirped record. Arrays are in FFT bin order
// (bin m has signed frequency bin_freq_hz[m]).
struct RangeProfile {
  Eigen::ArrayXd magnitudes_db;  // normalized to the profile maximum
  Eigen::ArrayXd bin_freq_hz;
  double chirp_slope_hz_per_s = 0.0;
  double sample_rate_hz = 0.0;
  Eigen::Index num_bins = 0;

  // R = c |f| / (2 k).
  double range_of_bin(Eigen::Index m) const;
  Eigen::Index signed_bin(Eigen::Index m) const { return m < (num_bins + 1) / 2 ? m : m - num_bins; }
  Eigen::Index bin_index(Eigen::Index signed_bin) const {
    return signed_bin >= 0 ? signed_bin : signed_bin + num_bins;
  }
  void validate() const;
};

struct RangeEstimate {
  double range_m = 0.0;
  double up_range_m = 0.0;
  double down_range_m = 0.0;
  Eigen::Index up_peak_bin = 0;    // FFT bin index, positive-frequency half
  Eigen::Index down_peak_bin = 0;  // FFT bin index, negative-frequency half
  double up_peak_db = 0.0;
  double down_peak_db = 0.0;
};

inline constexpr double kDbFloor = -300.0;
inline constexpr double kDbCap = 300.0;

// Dechirp against the zero-delay reference, x = reference * conj(received),
// so a delay tau gives a beat at +k tau during the up-sweep and -k tau during
// the down-sweep. The positive-frequency half of the profile comes from the
// up-sweep segment and the negative half from the down-sweep segment, each
// zero-padded to N; DC takes the larger of the two. The slope is taken from
// `chirp`.
RangeProfile stretch_process(const IQSignal& received, const IQSignal& reference, const ChirpParams& chirp,
                             Window window = Window::rectangular);

// Strongest bin in each half spectrum, converted to range and averaged. The
// positive half is signed bins [g, N/2) and the negative half (-N/2, -g],
// where g = dc_guard_bins; with g = 0 the DC bin belongs to both halves.
RangeEstimate estimate_range(const RangeProfile& profile, int dc_guard_bins = 0);

// Peak minus the largest sidelobe in the half spectrum containing peak_bin.
// The main lobe extends to the first local minimum on each side. Returns
// kDbCap when nothing lies outside the main lobe.
double pslr(const RangeProfile& profile, Eigen::Index peak_bin);

// Columns: bin (signed), frequency_hz, range_m, magnitude_db; rows in
// ascending frequency.
void write_profile_csv(const std::filesystem::path& path, const RangeProfile& profile);

inline double delay_for_range(double range_m) { return 2.0 * range_m / kSpeedOfLight; }
inline double range_for_delay(double delay_s) { return kSpeedOfLight * delay_s / 2.0; }

}  // namespace aec
