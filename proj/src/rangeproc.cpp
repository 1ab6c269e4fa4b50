#include "aec/rangeproc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "aec/errors.hpp"
#include "aec/fft.hpp"

namespace aec {
namespace {

// Signed-bin span [first, last] of the half spectrum holding signed bin s.
std::pair<Eigen::Index, Eigen::Index> half_of(const RangeProfile& p, Eigen::Index s) {
  const Eigen::Index n = p.num_bins;
  if (s >= 0) return {0, (n + 1) / 2 - 1};
  return {(n + 1) / 2 - n, 0};
}

}  // namespace

double RangeProfile::range_of_bin(Eigen::Index m) const {
  return kSpeedOfLight * std::abs(bin_freq_hz[m]) / (2.0 * chirp_slope_hz_per_s);
}

void RangeProfile::validate() const {
  if (num_bins <= 0 || magnitudes_db.size() != num_bins || bin_freq_hz.size() != num_bins)
    throw ArgumentError("range profile arrays do not match num_bins");
  if (!magnitudes_db.allFinite()) throw ArgumentError("range profile has non-finite magnitudes");
}

RangeProfile stretch_process(const IQSignal& received, const IQSignal& reference, const ChirpParams& chirp,
                             Window window) {
  received.validate();
  reference.validate();
  require_compatible(received, reference, "stretch_process");
  const Eigen::Index n = received.size();

  const Eigen::Index half = n / 2;
  const Eigen::ArrayXcd x = to_double(reference) * to_double(received).conjugate();
  // Each sweep segment is transformed on its own, zero-padded to n so the
  // bin spacing stays fs / n.
  auto segment_spectrum = [&](Eigen::Index start) {
    Eigen::ArrayXcd seg = Eigen::ArrayXcd::Zero(n);
    seg.head(half) = x.segment(start, half);
    if (window == Window::hann) {
      for (Eigen::Index i = 0; i < half; ++i)
        seg[i] *= 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(half));
    }
    return Eigen::ArrayXd(fft(seg).abs());
  };
  const Eigen::ArrayXd up = segment_spectrum(0);
  const Eigen::ArrayXd down = segment_spectrum(half);
  Eigen::ArrayXd mag(n);
  mag.head(half) = up.head(half);
  mag.tail(n - half) = down.tail(n - half);
  mag[0] = std::max(up[0], down[0]);
  const double peak = mag.maxCoeff();

  RangeProfile p;
  p.num_bins = n;
  p.sample_rate_hz = received.sample_rate_hz;
  p.chirp_slope_hz_per_s = chirp.slope_hz_per_s();
  p.magnitudes_db.resize(n);
  p.bin_freq_hz.resize(n);
  for (Eigen::Index m = 0; m < n; ++m) {
    p.bin_freq_hz[m] = bin_frequency(m, n, p.sample_rate_hz);
    p.magnitudes_db[m] = peak > 0.0 && mag[m] > 0.0 ? std::max(kDbFloor, 20.0 * std::log10(mag[m] / peak)) : kDbFloor;
  }
  return p;
}

RangeEstimate estimate_range(const RangeProfile& profile, int dc_guard_bins) {
  profile.validate();
  const Eigen::Index n = profile.num_bins;
  const Eigen::Index g = std::max(0, dc_guard_bins);
  const Eigen::Index pos_end = (n + 1) / 2;  // exclusive signed bound
  if (g >= pos_end) throw ArgumentError("estimate_range: DC guard covers the whole half spectrum");

  auto best_in = [&](Eigen::Index first, Eigen::Index last) {
    Eigen::Index best = profile.bin_index(first);
    for (Eigen::Index s = first; s <= last; ++s) {
      const Eigen::Index m = profile.bin_index(s);
      if (profile.magnitudes_db[m] > profile.magnitudes_db[best]) best = m;
    }
    return best;
  };

  RangeEstimate e;
  e.up_peak_bin = best_in(g, pos_end - 1);
  e.down_peak_bin = best_in(pos_end - n, -g);
  e.up_peak_db = profile.magnitudes_db[e.up_peak_bin];
  e.down_peak_db = profile.magnitudes_db[e.down_peak_bin];
  e.up_range_m = profile.range_of_bin(e.up_peak_bin);
  e.down_range_m = profile.range_of_bin(e.down_peak_bin);
  e.range_m = 0.5 * (e.up_range_m + e.down_range_m);
  return e;
}

double pslr(const RangeProfile& profile, Eigen::Index peak_bin) {
  profile.validate();
  if (peak_bin < 0 || peak_bin >= profile.num_bins) throw ArgumentError("pslr: peak bin out of range");
  const Eigen::Index s = profile.signed_bin(peak_bin);
  const auto [first, last] = half_of(profile, s);
  auto mag = [&](Eigen::Index signed_bin) { return profile.magnitudes_db[profile.bin_index(signed_bin)]; };

  Eigen::Index lo = s, hi = s;
  while (lo > first && mag(lo - 1) < mag(lo)) --lo;
  while (hi < last && mag(hi + 1) < mag(hi)) ++hi;

  double sidelobe = -std::numeric_limits<double>::infinity();
  for (Eigen::Index b = first; b <= last; ++b)
    if (b < lo || b > hi) sidelobe = std::max(sidelobe, mag(b));
  if (!std::isfinite(sidelobe)) return kDbCap;
  return std::min(kDbCap, mag(s) - sidelobe);
}

void write_profile_csv(const std::filesystem::path& path, const RangeProfile& profile) {
  profile.validate();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "bin,frequency_hz,range_m,magnitude_db\n";
  out.precision(10);
  const Eigen::Index n = profile.num_bins;
  for (Eigen::Index s = (n + 1) / 2 - n; s < (n + 1) / 2; ++s) {
    const Eigen::Index m = profile.bin_index(s);
    out << s << ',' << profile.bin_freq_hz[m] << ',' << profile.range_of_bin(m) << ',' << profile.magnitudes_db[m]
        << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace aec
