#pragma once

// Frequency-domain engine behind conv1d and conv1d_transposed.
//
// A stride-1 "same" cross-correlation with K taps is evaluated by
// overlap-save: the zero-padded input is cut into tiles of F samples that
// overlap by K-1, each tile is transformed once, and channel mixing happens
// as one small complex matrix product per frequency bin. The same spectra
// serve the adjoint (overlap-add of F-sample tiles) and the kernel gradient
// (cross-spectrum summed over tiles and batch).
//
// Padding is (K-1)/2 on the left, the remainder on the right.

#include <algorithm>
#include <complex>
#include <vector>

#include <Eigen/Core>

#include "aec/fft.hpp"
#include "aec/nn/tensor.hpp"

namespace aec::nn {

struct ConvGeometry {
  Index length = 0;    // L, input and output length
  Index kernel = 0;    // K
  Index pad_left = 0;  // (K - 1) / 2
  Index fft_size = 0;  // F
  Index tile = 0;      // P = F - K + 1 outputs per tile
  Index tiles = 0;
  Index bins = 0;      // F / 2 + 1

  static ConvGeometry make(Index length, Index kernel) {
    if (length < 1 || kernel < 1) {
      throw DimensionError("conv geometry needs positive length and kernel, got L=" + std::to_string(length) +
                           " K=" + std::to_string(kernel));
    }
    ConvGeometry g;
    g.length = length;
    g.kernel = kernel;
    g.pad_left = (kernel - 1) / 2;
    // Whole-record transforms for short inputs; bounded tiles for long ones
    // so kernel spectra stay small.
    const Index span = std::min(length, std::max<Index>(4 * kernel, 512));
    g.fft_size = good_fft_size(kernel - 1 + span);
    g.tile = g.fft_size - kernel + 1;
    g.tiles = (length + g.tile - 1) / g.tile;
    g.bins = g.fft_size / 2 + 1;
    return g;
  }

  bool operator==(const ConvGeometry& o) const {
    return length == o.length && kernel == o.kernel && fft_size == o.fft_size;
  }
};

// Spectra of a set of F-sample segments: one (channels x columns) complex
// block per frequency bin, columns enumerating (example, tile).
template <typename Scalar>
struct Spectra {
  using Complex = std::complex<Scalar>;
  using Matrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;

  Index channels = 0;
  Index columns = 0;
  Index bins = 0;
  Matrix data;  // channels x (bins * columns)

  Spectra() = default;
  Spectra(Index channels_, Index columns_, Index bins_)
      : channels(channels_), columns(columns_), bins(bins_), data(channels_, bins_ * columns_) {}

  auto block(Index bin) { return data.middleCols(bin * columns, columns); }
  auto block(Index bin) const { return data.middleCols(bin * columns, columns); }
};

// Per-bin kernel spectra of a [first, second, K] weight tensor, pre-scaled by
// 1/F so that unscaled inverse transforms come out normalized.
template <typename Scalar>
struct KernelSpectra {
  using Complex = std::complex<Scalar>;
  using Matrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;

  ConvGeometry geometry;
  Index first = 0;
  Index second = 0;
  std::vector<Matrix> bins;
};

namespace detail {

template <typename Scalar>
struct Scratch {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> real;
  Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1> spectrum;
  Scratch(Index f, Index bins) : real(f), spectrum(bins) {}
};

}  // namespace detail

template <typename Scalar>
KernelSpectra<Scalar> kernel_spectra(const Tensor<Scalar>& weight, const ConvGeometry& g) {
  require_rank(weight.shape(), 3, "kernel_spectra");
  require_axis(weight.shape(), 2, g.kernel, "kernel_spectra", "kernel");
  KernelSpectra<Scalar> ks;
  ks.geometry = g;
  ks.first = weight.dim(0);
  ks.second = weight.dim(1);
  ks.bins.assign(static_cast<std::size_t>(g.bins), typename KernelSpectra<Scalar>::Matrix(ks.first, ks.second));
  detail::Scratch<Scalar> s(g.fft_size, g.bins);
  auto& fft = thread_fft<Scalar>();
  const Scalar scale = Scalar(1) / static_cast<Scalar>(g.fft_size);
  for (Index a = 0; a < ks.first; ++a) {
    for (Index b = 0; b < ks.second; ++b) {
      s.real.setZero();
      for (Index k = 0; k < g.kernel; ++k) s.real[k] = weight(a, b, k);
      fft.fwd(s.spectrum.data(), s.real.data(), g.fft_size);
      for (Index f = 0; f < g.bins; ++f) ks.bins[static_cast<std::size_t>(f)](a, b) = s.spectrum[f] * scale;
    }
  }
  return ks;
}

// Zero-padded, overlapping input segments: segment t holds xp[tP, tP + F)
// where xp[j] = x[j - pad_left].
template <typename Scalar>
Spectra<Scalar> padded_spectra(const Tensor<Scalar>& x, const ConvGeometry& g) {
  const Index batch = x.dim(0), channels = x.dim(1);
  Spectra<Scalar> out(channels, batch * g.tiles, g.bins);
  detail::Scratch<Scalar> s(g.fft_size, g.bins);
  auto& fft = thread_fft<Scalar>();
  for (Index b = 0; b < batch; ++b) {
    for (Index c = 0; c < channels; ++c) {
      const Scalar* row = x.data() + (b * channels + c) * g.length;
      for (Index t = 0; t < g.tiles; ++t) {
        const Index start = t * g.tile - g.pad_left;
        for (Index m = 0; m < g.fft_size; ++m) {
          const Index j = start + m;
          s.real[m] = (j >= 0 && j < g.length) ? row[j] : Scalar(0);
        }
        fft.fwd(s.spectrum.data(), s.real.data(), g.fft_size);
        const Index col = b * g.tiles + t;
        for (Index f = 0; f < g.bins; ++f) out.data(c, f * out.columns + col) = s.spectrum[f];
      }
    }
  }
  return out;
}

// Non-overlapping P-sample tiles of x, zero-filled to F.
template <typename Scalar>
Spectra<Scalar> tile_spectra(const Tensor<Scalar>& x, const ConvGeometry& g) {
  const Index batch = x.dim(0), channels = x.dim(1);
  Spectra<Scalar> out(channels, batch * g.tiles, g.bins);
  detail::Scratch<Scalar> s(g.fft_size, g.bins);
  auto& fft = thread_fft<Scalar>();
  for (Index b = 0; b < batch; ++b) {
    for (Index c = 0; c < channels; ++c) {
      const Scalar* row = x.data() + (b * channels + c) * g.length;
      for (Index t = 0; t < g.tiles; ++t) {
        const Index start = t * g.tile;
        const Index count = std::min(g.tile, g.length - start);
        s.real.setZero();
        std::copy(row + start, row + start + count, s.real.data());
        fft.fwd(s.spectrum.data(), s.real.data(), g.fft_size);
        const Index col = b * g.tiles + t;
        for (Index f = 0; f < g.bins; ++f) out.data(c, f * out.columns + col) = s.spectrum[f];
      }
    }
  }
  return out;
}

// Inverse of each segment, keeping the first P samples of every tile (the
// alias-free part of a circular correlation).
template <typename Scalar>
Tensor<Scalar> crop_tiles(const Spectra<Scalar>& spec, const ConvGeometry& g, Index batch) {
  Tensor<Scalar> y({batch, spec.channels, g.length});
  detail::Scratch<Scalar> s(g.fft_size, g.bins);
  auto& fft = thread_fft<Scalar>();
  for (Index b = 0; b < batch; ++b) {
    for (Index c = 0; c < spec.channels; ++c) {
      Scalar* row = y.data() + (b * spec.channels + c) * g.length;
      for (Index t = 0; t < g.tiles; ++t) {
        const Index col = b * g.tiles + t;
        for (Index f = 0; f < g.bins; ++f) s.spectrum[f] = spec.data(c, f * spec.columns + col);
        fft.inv(s.real.data(), s.spectrum.data(), g.fft_size);
        const Index start = t * g.tile;
        const Index count = std::min(g.tile, g.length - start);
        std::copy(s.real.data(), s.real.data() + count, row + start);
      }
    }
  }
  return y;
}

// Inverse of each segment, overlap-added back onto the padded axis and
// cropped to the original [0, L) window.
template <typename Scalar>
Tensor<Scalar> overlap_add(const Spectra<Scalar>& spec, const ConvGeometry& g, Index batch) {
  Tensor<Scalar> y({batch, spec.channels, g.length});
  detail::Scratch<Scalar> s(g.fft_size, g.bins);
  auto& fft = thread_fft<Scalar>();
  for (Index b = 0; b < batch; ++b) {
    for (Index c = 0; c < spec.channels; ++c) {
      Scalar* row = y.data() + (b * spec.channels + c) * g.length;
      for (Index t = 0; t < g.tiles; ++t) {
        const Index col = b * g.tiles + t;
        for (Index f = 0; f < g.bins; ++f) s.spectrum[f] = spec.data(c, f * spec.columns + col);
        fft.inv(s.real.data(), s.spectrum.data(), g.fft_size);
        const Index start = t * g.tile - g.pad_left;
        for (Index m = 0; m < g.fft_size; ++m) {
          const Index j = start + m;
          if (j >= 0 && j < g.length) row[j] += s.real[m];
        }
      }
    }
  }
  return y;
}

// out(first) = conj(W) * in(second), bin by bin.
template <typename Scalar>
Spectra<Scalar> correlate(const KernelSpectra<Scalar>& w, const Spectra<Scalar>& in) {
  Spectra<Scalar> out(w.first, in.columns, in.bins);
  for (Index f = 0; f < in.bins; ++f) {
    out.block(f).noalias() = w.bins[static_cast<std::size_t>(f)].conjugate() * in.block(f);
  }
  return out;
}

// out(second) = W^T * in(first), bin by bin.
template <typename Scalar>
Spectra<Scalar> adjoint(const KernelSpectra<Scalar>& w, const Spectra<Scalar>& in) {
  Spectra<Scalar> out(w.second, in.columns, in.bins);
  for (Index f = 0; f < in.bins; ++f) {
    out.block(f).noalias() = w.bins[static_cast<std::size_t>(f)].transpose() * in.block(f);
  }
  return out;
}

// Kernel gradient dW[a, b, k] = sum over batch and n of tiles_a[n] * padded_b[n + k],
// accumulated into grad ([first, second, K]).
template <typename Scalar>
void accumulate_kernel_gradient(const Spectra<Scalar>& tiles, const Spectra<Scalar>& padded, const ConvGeometry& g,
                                Tensor<Scalar>& grad) {
  using Matrix = typename Spectra<Scalar>::Matrix;
  const Index first = tiles.channels, second = padded.channels;
  std::vector<Matrix> cross(static_cast<std::size_t>(g.bins));
  for (Index f = 0; f < g.bins; ++f) {
    cross[static_cast<std::size_t>(f)].noalias() = tiles.block(f).conjugate() * padded.block(f).transpose();
  }
  detail::Scratch<Scalar> s(g.fft_size, g.bins);
  auto& fft = thread_fft<Scalar>();
  const Scalar scale = Scalar(1) / static_cast<Scalar>(g.fft_size);
  for (Index a = 0; a < first; ++a) {
    for (Index b = 0; b < second; ++b) {
      for (Index f = 0; f < g.bins; ++f) s.spectrum[f] = cross[static_cast<std::size_t>(f)](a, b);
      fft.inv(s.real.data(), s.spectrum.data(), g.fft_size);
      for (Index k = 0; k < g.kernel; ++k) grad(a, b, k) += s.real[k] * scale;
    }
  }
}

}  // namespace aec::nn
