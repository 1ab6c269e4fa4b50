#include "aec/signal.hpp"

#include <cmath>
#include <string>

#include <fftw3.h>

#include "aec/errors.hpp"
#include "aec/fft.hpp"
#include "aec/parallel.hpp"

namespace aec {

namespace {

// FFTW planning is not reentrant; enable its internal lock once so the
// thread-local engines can plan concurrently.
[[maybe_unused]] const bool kPlannerThreadSafe = [] {
  fftw_make_planner_thread_safe();
  fftwf_make_planner_thread_safe();
  return true;
}();

}  // namespace

Eigen::ArrayXcd fft(const Eigen::ArrayXcd& x) {
  Eigen::ArrayXcd out(x.size());
  thread_fft<double>().fwd(out.data(), x.data(), x.size());
  return out;
}

Eigen::ArrayXcd ifft(const Eigen::ArrayXcd& X) {
  Eigen::ArrayXcd out(X.size());
  thread_fft<double>().inv(out.data(), X.data(), X.size());
  return out / static_cast<double>(X.size());
}

Eigen::Index good_fft_size(Eigen::Index n) {
  if (n <= 1) return 1;
  for (Eigen::Index m = n;; ++m) {
    Eigen::Index r = m;
    for (const Eigen::Index p : {2, 3, 5}) {
      while (r % p == 0) r /= p;
    }
    if (r == 1) return m;
  }
}

double IQSignal::power() const {
  if (samples.size() == 0) return 0.0;
  return energy() / static_cast<double>(samples.size());
}

double IQSignal::energy() const { return samples.cast<std::complex<double>>().abs2().sum(); }

void IQSignal::validate() const {
  if (samples.size() == 0) throw ArgumentError("IQSignal is empty");
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
    throw ArgumentError("IQSignal sample rate must be positive, got " + std::to_string(sample_rate_hz));
  }
  if (!samples.real().allFinite() || !samples.imag().allFinite()) {
    throw ArgumentError("IQSignal contains non-finite samples");
  }
}

Eigen::ArrayXcd to_double(const IQSignal& sig) { return sig.samples.cast<std::complex<double>>(); }

IQSignal from_double(const Eigen::ArrayXcd& samples, double sample_rate_hz) {
  return IQSignal{samples.cast<std::complex<float>>(), sample_rate_hz};
}

void require_compatible(const IQSignal& a, const IQSignal& b, const char* what) {
  if (a.size() != b.size()) {
    throw ArgumentError(std::string(what) + ": length mismatch (" + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()) + ")");
  }
  if (a.sample_rate_hz != b.sample_rate_hz) {
    throw ArgumentError(std::string(what) + ": sample rate mismatch");
  }
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) {
  std::uint64_t z = parent + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {
std::atomic<int> g_thread_limit{0};
}  // namespace

void set_thread_limit(int threads) { g_thread_limit = std::max(threads, 0); }

int thread_limit() {
  const int limit = g_thread_limit.load();
  if (limit > 0) return limit;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

}  // namespace aec
