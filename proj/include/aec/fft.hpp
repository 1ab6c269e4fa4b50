#pragma once

// Thin helpers over Eigen's FFT module. The build defines EIGEN_FFTW_DEFAULT
// so every transform is executed by FFTW; plans are cached per thread.

#include <complex>

#include <Eigen/Core>
#include <unsupported/Eigen/FFT>

namespace aec {

template <typename Scalar>
using FFTEngine = Eigen::FFT<Scalar>;

// One engine per (thread, scalar type). Eigen::FFT caches a plan for every
// transform size it has seen.
template <typename Scalar>
FFTEngine<Scalar>& thread_fft() {
  thread_local FFTEngine<Scalar> engine = [] {
    FFTEngine<Scalar> e;
    e.SetFlag(FFTEngine<Scalar>::HalfSpectrum);
    e.SetFlag(FFTEngine<Scalar>::Unscaled);
    return e;
  }();
  return engine;
}

// Forward complex DFT, unnormalized.
Eigen::ArrayXcd fft(const Eigen::ArrayXcd& x);

// Inverse complex DFT including the 1/N factor.
Eigen::ArrayXcd ifft(const Eigen::ArrayXcd& X);

// Signed frequency (Hz) of DFT bin m for an n-point transform.
inline double bin_frequency(Eigen::Index m, Eigen::Index n, double sample_rate_hz) {
  const Eigen::Index signed_bin = (m < (n + 1) / 2) ? m : m - n;
  return static_cast<double>(signed_bin) * sample_rate_hz / static_cast<double>(n);
}

// Smallest integer >= n whose only prime factors are 2, 3 and 5.
Eigen::Index good_fft_size(Eigen::Index n);

}  // namespace aec
