#pragma once

#include <complex>
#include <cstdint>

#include <Eigen/Core>

namespace aec {

inline constexpr double kSpeedOfLight = 299792458.0;

// Complex baseband record. I and Q are stored as 32-bit floats.
struct IQSignal {
  Eigen::ArrayXcf samples;
  double sample_rate_hz = 0.0;

  Eigen::Index size() const { return samples.size(); }
  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate_hz; }

  // Mean squared magnitude.
  double power() const;
  double energy() const;

  // Throws ArgumentError if empty, non-finite, or the rate is not positive.
  void validate() const;
};

// Widen to double precision for intermediate DSP.
Eigen::ArrayXcd to_double(const IQSignal& sig);
IQSignal from_double(const Eigen::ArrayXcd& samples, double sample_rate_hz);

// Throws ArgumentError unless a and b share length and rate.
void require_compatible(const IQSignal& a, const IQSignal& b, const char* what);

// Seed for sub-stream `stream` of a parent seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream);

}  // namespace aec
