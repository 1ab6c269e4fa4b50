#pragma once

// Layers of the convolutional autoencoder. Activations are rank-3 tensors
// [batch, channels, length]. Each layer exposes forward() and backward();
// backward() returns the gradient w.r.t. the layer input and accumulates
// parameter gradients into LayerParams.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "aec/nn/fft_conv.hpp"
#include "aec/nn/tensor.hpp"

namespace aec::nn {

template <typename Scalar>
struct LayerParams {
  Tensor<Scalar> weight;
  Tensor<Scalar> bias;
  Tensor<Scalar> grad_weight;
  Tensor<Scalar> grad_bias;

  LayerParams() = default;
  LayerParams(Shape weight_shape, Shape bias_shape)
      : weight(weight_shape), bias(bias_shape), grad_weight(weight_shape), grad_bias(bias_shape) {}

  void zero_grad() {
    grad_weight.fill(Scalar(0));
    grad_bias.fill(Scalar(0));
  }

  // Uniform in +-sqrt(1 / fan_in); biases start at zero.
  void init_uniform(Index fan_in, std::mt19937_64& rng) {
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Index i = 0; i < weight.size(); ++i) weight[i] = static_cast<Scalar>(dist(rng));
    bias.fill(Scalar(0));
  }
};

// ---------------------------------------------------------------------------
// Same-padded stride-1 convolution (cross-correlation) and its transpose.

template <typename Scalar>
struct ConvCache {
  Spectra<Scalar> spectra;  // padded input (conv) or input tiles (transposed)
  Index batch = 0;
};

// Kernels [out_channels, in_channels, K]; bias [out_channels].
template <typename Scalar>
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(Index in_channels, Index out_channels, Index kernel, Index length)
      : params({out_channels, in_channels, kernel}, {out_channels}),
        geometry_(ConvGeometry::make(length, kernel)) {
    sync();
  }

  Conv1d(const LayerParams<Scalar>& p, Index length)
      : params(p), geometry_(ConvGeometry::make(length, p.weight.dim(2))) {
    sync();
  }

  Index in_channels() const { return params.weight.dim(1); }
  Index out_channels() const { return params.weight.dim(0); }
  Index kernel() const { return params.weight.dim(2); }
  const ConvGeometry& geometry() const { return geometry_; }

  // Recompute kernel spectra after the weights change.
  void sync() { spectra_ = kernel_spectra(params.weight, geometry_); }

  Tensor<Scalar> forward(const Tensor<Scalar>& x, ConvCache<Scalar>* cache = nullptr) const {
    check_input(x);
    ConvCache<Scalar> local;
    ConvCache<Scalar>& c = cache ? *cache : local;
    c.batch = x.dim(0);
    c.spectra = padded_spectra(x, geometry_);
    Tensor<Scalar> y = crop_tiles(correlate(spectra_, c.spectra), geometry_, c.batch);
    add_bias(y);
    debug_check_finite(y, "conv1d");
    return y;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& grad_out, const ConvCache<Scalar>& cache) {
    require_rank(grad_out.shape(), 3, "conv1d backward");
    require_axis(grad_out.shape(), 1, out_channels(), "conv1d backward", "channel");
    require_axis(grad_out.shape(), 2, geometry_.length, "conv1d backward", "length");
    const Spectra<Scalar> g = tile_spectra(grad_out, geometry_);
    accumulate_kernel_gradient(g, cache.spectra, geometry_, params.grad_weight);
    accumulate_bias_gradient(grad_out);
    return overlap_add(adjoint(spectra_, g), geometry_, cache.batch);
  }

  LayerParams<Scalar> params;

 private:
  void check_input(const Tensor<Scalar>& x) const {
    require_rank(x.shape(), 3, "conv1d");
    require_axis(x.shape(), 1, in_channels(), "conv1d", "channel");
    require_axis(x.shape(), 2, geometry_.length, "conv1d", "length");
  }

  void add_bias(Tensor<Scalar>& y) const {
    for (Index b = 0; b < y.dim(0); ++b) {
      y.rows(b).colwise() += params.bias.array();
    }
  }

  void accumulate_bias_gradient(const Tensor<Scalar>& g) {
    for (Index b = 0; b < g.dim(0); ++b) params.grad_bias.array() += g.rows(b).rowwise().sum();
  }

  ConvGeometry geometry_;
  KernelSpectra<Scalar> spectra_;
};

// Adjoint of Conv1d with the same padding. Kernels [in_channels,
// out_channels, K]; bias [out_channels].
template <typename Scalar>
class Conv1dTransposed {
 public:
  Conv1dTransposed() = default;
  Conv1dTransposed(Index in_channels, Index out_channels, Index kernel, Index length)
      : params({in_channels, out_channels, kernel}, {out_channels}),
        geometry_(ConvGeometry::make(length, kernel)) {
    sync();
  }
  Conv1dTransposed(const LayerParams<Scalar>& p, Index length)
      : params(p), geometry_(ConvGeometry::make(length, p.weight.dim(2))) {
    sync();
  }

  Index in_channels() const { return params.weight.dim(0); }
  Index out_channels() const { return params.weight.dim(1); }
  Index kernel() const { return params.weight.dim(2); }
  const ConvGeometry& geometry() const { return geometry_; }

  void sync() { spectra_ = kernel_spectra(params.weight, geometry_); }

  Tensor<Scalar> forward(const Tensor<Scalar>& x, ConvCache<Scalar>* cache = nullptr) const {
    check_input(x);
    ConvCache<Scalar> local;
    ConvCache<Scalar>& c = cache ? *cache : local;
    c.batch = x.dim(0);
    c.spectra = tile_spectra(x, geometry_);
    Tensor<Scalar> y = overlap_add(adjoint(spectra_, c.spectra), geometry_, c.batch);
    for (Index b = 0; b < y.dim(0); ++b) y.rows(b).colwise() += params.bias.array();
    debug_check_finite(y, "conv1d_transposed");
    return y;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& grad_out, const ConvCache<Scalar>& cache) {
    require_rank(grad_out.shape(), 3, "conv1d_transposed backward");
    require_axis(grad_out.shape(), 1, out_channels(), "conv1d_transposed backward", "channel");
    require_axis(grad_out.shape(), 2, geometry_.length, "conv1d_transposed backward", "length");
    const Spectra<Scalar> g = padded_spectra(grad_out, geometry_);
    accumulate_kernel_gradient(cache.spectra, g, geometry_, params.grad_weight);
    for (Index b = 0; b < grad_out.dim(0); ++b) params.grad_bias.array() += grad_out.rows(b).rowwise().sum();
    return crop_tiles(correlate(spectra_, g), geometry_, cache.batch);
  }

  LayerParams<Scalar> params;

 private:
  void check_input(const Tensor<Scalar>& x) const {
    require_rank(x.shape(), 3, "conv1d_transposed");
    require_axis(x.shape(), 1, in_channels(), "conv1d_transposed", "channel");
    require_axis(x.shape(), 2, geometry_.length, "conv1d_transposed", "length");
  }

  ConvGeometry geometry_;
  KernelSpectra<Scalar> spectra_;
};

// ---------------------------------------------------------------------------
// IQ mixing. The mixer is a 2x2 convolution over the (IQ row, time) plane,
// valid along rows and same-padded along time: [B, 2, N] -> [B, C, N].
// Weight layout [C, 1, 2, 2] indexed (channel, 0, row, tap).

template <typename Scalar>
class IQMixer {
 public:
  IQMixer() = default;
  explicit IQMixer(Index out_channels) : params({out_channels, 1, 2, 2}, {out_channels}) {}
  explicit IQMixer(const LayerParams<Scalar>& p) : params(p) {}

  Index out_channels() const { return params.weight.dim(0); }

  Tensor<Scalar> forward(const Tensor<Scalar>& x) const {
    check_iq(x.shape(), "iq_mix_conv2d");
    const Index batch = x.dim(0), n = x.dim(2), channels = out_channels();
    Tensor<Scalar> y({batch, channels, n});
    for (Index b = 0; b < batch; ++b) {
      for (Index o = 0; o < channels; ++o) {
        for (Index t = 0; t < n; ++t) {
          Scalar acc = params.bias[o];
          for (Index r = 0; r < 2; ++r) {
            for (Index k = 0; k < 2; ++k) {
              const Index j = t + k;  // left pad (2-1)/2 = 0
              if (j < n) acc += w(o, r, k) * x(b, r, j);
            }
          }
          y(b, o, t) = acc;
        }
      }
    }
    debug_check_finite(y, "iq_mix_conv2d");
    return y;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& x, const Tensor<Scalar>& grad_out) {
    const Index batch = x.dim(0), n = x.dim(2), channels = out_channels();
    require_axis(grad_out.shape(), 1, channels, "iq_mix_conv2d backward", "channel");
    Tensor<Scalar> dx({batch, 2, n});
    for (Index b = 0; b < batch; ++b) {
      for (Index o = 0; o < channels; ++o) {
        for (Index t = 0; t < n; ++t) {
          const Scalar g = grad_out(b, o, t);
          params.grad_bias[o] += g;
          for (Index r = 0; r < 2; ++r) {
            for (Index k = 0; k < 2; ++k) {
              const Index j = t + k;
              if (j < n) {
                grad_w(o, r, k) += g * x(b, r, j);
                dx(b, r, j) += g * w(o, r, k);
              }
            }
          }
        }
      }
    }
    return dx;
  }

  LayerParams<Scalar> params;

 private:
  static void check_iq(const Shape& s, const char* what) {
    require_rank(s, 3, what);
    require_axis(s, 1, 2, what, "IQ height");
  }
  Scalar w(Index o, Index r, Index k) const { return params.weight[(o * 2 + r) * 2 + k]; }
  Scalar& grad_w(Index o, Index r, Index k) { return params.grad_weight[(o * 2 + r) * 2 + k]; }
};

// Transpose of IQMixer: [B, C, N] -> [B, 2, N], one shared bias.
// Weight layout [C, 1, 2, 2].
template <typename Scalar>
class IQUnmixer {
 public:
  IQUnmixer() = default;
  explicit IQUnmixer(Index in_channels) : params({in_channels, 1, 2, 2}, {1}) {}
  explicit IQUnmixer(const LayerParams<Scalar>& p) : params(p) {}

  Index in_channels() const { return params.weight.dim(0); }

  Tensor<Scalar> forward(const Tensor<Scalar>& h) const {
    require_rank(h.shape(), 3, "iq_unmix");
    require_axis(h.shape(), 1, in_channels(), "iq_unmix", "channel");
    const Index batch = h.dim(0), n = h.dim(2);
    Tensor<Scalar> z({batch, 2, n});
    z.fill(params.bias[0]);
    for (Index b = 0; b < batch; ++b) {
      for (Index c = 0; c < in_channels(); ++c) {
        for (Index r = 0; r < 2; ++r) {
          for (Index k = 0; k < 2; ++k) {
            const Scalar wk = w(c, r, k);
            for (Index t = k; t < n; ++t) z(b, r, t) += wk * h(b, c, t - k);
          }
        }
      }
    }
    debug_check_finite(z, "iq_unmix");
    return z;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& h, const Tensor<Scalar>& grad_out) {
    require_axis(grad_out.shape(), 1, 2, "iq_unmix backward", "IQ height");
    const Index batch = h.dim(0), n = h.dim(2);
    Tensor<Scalar> dh({batch, in_channels(), n});
    params.grad_bias[0] += grad_out.array().sum();
    for (Index b = 0; b < batch; ++b) {
      for (Index c = 0; c < in_channels(); ++c) {
        for (Index r = 0; r < 2; ++r) {
          for (Index k = 0; k < 2; ++k) {
            const Scalar wk = w(c, r, k);
            Scalar gw = 0;
            for (Index t = k; t < n; ++t) {
              gw += grad_out(b, r, t) * h(b, c, t - k);
              dh(b, c, t - k) += grad_out(b, r, t) * wk;
            }
            grad_w(c, r, k) += gw;
          }
        }
      }
    }
    return dh;
  }

  LayerParams<Scalar> params;

 private:
  Scalar w(Index c, Index r, Index k) const { return params.weight[(c * 2 + r) * 2 + k]; }
  Scalar& grad_w(Index c, Index r, Index k) { return params.grad_weight[(c * 2 + r) * 2 + k]; }
};

// ---------------------------------------------------------------------------
// Pooling.

struct PoolIndices {
  Shape input_shape;               // [B, C, L]
  std::vector<std::int32_t> argmax;  // one per pooled element, offset within its row
};

template <typename Scalar>
struct PoolResult {
  Tensor<Scalar> values;
  PoolIndices indices;
};

// Non-overlapping max over `window` samples; ties go to the lower index.
template <typename Scalar>
PoolResult<Scalar> maxpool(const Tensor<Scalar>& x, Index window = 2) {
  require_rank(x.shape(), 3, "maxpool");
  const Index batch = x.dim(0), channels = x.dim(1), len = x.dim(2);
  if (window < 1 || len % window != 0) {
    throw DimensionError("maxpool: length " + std::to_string(len) + " is not divisible by window " +
                         std::to_string(window));
  }
  const Index out_len = len / window;
  PoolResult<Scalar> r{Tensor<Scalar>({batch, channels, out_len}), PoolIndices{x.shape(), {}}};
  r.indices.argmax.resize(static_cast<std::size_t>(batch * channels * out_len));
  for (Index row = 0; row < batch * channels; ++row) {
    const Scalar* in = x.data() + row * len;
    Scalar* out = r.values.data() + row * out_len;
    std::int32_t* idx = r.indices.argmax.data() + row * out_len;
    for (Index p = 0; p < out_len; ++p) {
      Index best = p * window;
      for (Index j = best + 1; j < (p + 1) * window; ++j) {
        if (in[j] > in[best]) best = j;
      }
      out[p] = in[best];
      idx[p] = static_cast<std::int32_t>(best);
    }
  }
  return r;
}

// Scatter pooled values back to the recorded positions; zeros elsewhere.
template <typename Scalar>
Tensor<Scalar> max_unpool(const Tensor<Scalar>& values, const PoolIndices& indices) {
  require_rank(values.shape(), 3, "max_unpool");
  const Shape& in_shape = indices.input_shape;
  if (values.dim(0) != in_shape[0] || values.dim(1) != in_shape[1] ||
      static_cast<std::size_t>(values.size()) != indices.argmax.size()) {
    throw DimensionError("max_unpool: values " + shape_string(values.shape()) +
                         " do not match the pooling indices recorded for " + shape_string(in_shape));
  }
  const Index len = in_shape[2], pooled = values.dim(2);
  Tensor<Scalar> out(in_shape);
  for (Index row = 0; row < in_shape[0] * in_shape[1]; ++row) {
    for (Index p = 0; p < pooled; ++p) {
      const Index j = indices.argmax[static_cast<std::size_t>(row * pooled + p)];
      if (j < 0 || j >= len) throw Error("max_unpool: pooling index " + std::to_string(j) + " out of range");
      out[row * len + j] = values[row * pooled + p];
    }
  }
  return out;
}

// Gradient of maxpool: route each pooled gradient to its argmax.
template <typename Scalar>
Tensor<Scalar> maxpool_backward(const Tensor<Scalar>& grad_out, const PoolIndices& indices) {
  return max_unpool(grad_out, indices);
}

// Gradient of max_unpool: gather from the recorded positions.
template <typename Scalar>
Tensor<Scalar> max_unpool_backward(const Tensor<Scalar>& grad_out, const PoolIndices& indices) {
  const Index rows = indices.input_shape[0] * indices.input_shape[1];
  const Index len = indices.input_shape[2];
  const Index pooled = static_cast<Index>(indices.argmax.size()) / rows;
  Tensor<Scalar> g({indices.input_shape[0], indices.input_shape[1], pooled});
  for (Index row = 0; row < rows; ++row) {
    for (Index p = 0; p < pooled; ++p) {
      g[row * pooled + p] = grad_out[row * len + indices.argmax[static_cast<std::size_t>(row * pooled + p)]];
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Pointwise ops and loss.

template <typename Scalar>
Tensor<Scalar> leaky_relu(const Tensor<Scalar>& x, Scalar slope = Scalar(0.2)) {
  Tensor<Scalar> y = x;
  y.array() = (x.array() > Scalar(0)).select(x.array(), slope * x.array());
  return y;
}

template <typename Scalar>
Tensor<Scalar> leaky_relu_backward(const Tensor<Scalar>& x, const Tensor<Scalar>& grad_out,
                                   Scalar slope = Scalar(0.2)) {
  Tensor<Scalar> g = grad_out;
  g.array() = (x.array() > Scalar(0)).select(grad_out.array(), slope * grad_out.array());
  return g;
}

template <typename Scalar>
struct LossResult {
  Scalar loss = 0;
  Tensor<Scalar> grad;
};

// Mean over every element (both IQ rows, full length) of the squared error.
template <typename Scalar>
LossResult<Scalar> mse_loss(const Tensor<Scalar>& prediction, const Tensor<Scalar>& target) {
  if (prediction.shape() != target.shape()) {
    throw DimensionError("mse_loss: prediction " + shape_string(prediction.shape()) + " vs target " +
                         shape_string(target.shape()));
  }
  const auto count = static_cast<Scalar>(prediction.size());
  LossResult<Scalar> r;
  Tensor<Scalar> diff = prediction;
  diff.array() -= target.array();
  r.loss = diff.array().square().sum() / count;
  diff.array() *= Scalar(2) / count;
  r.grad = std::move(diff);
  return r;
}

// ---------------------------------------------------------------------------
// Free-function forms, convenient for single calls and tests.

template <typename Scalar>
Tensor<Scalar> conv1d(const Tensor<Scalar>& x, const LayerParams<Scalar>& p) {
  require_rank(x.shape(), 3, "conv1d");
  return Conv1d<Scalar>(p, x.dim(2)).forward(x);
}

template <typename Scalar>
Tensor<Scalar> conv1d_transposed(const Tensor<Scalar>& x, const LayerParams<Scalar>& p) {
  require_rank(x.shape(), 3, "conv1d_transposed");
  return Conv1dTransposed<Scalar>(p, x.dim(2)).forward(x);
}

}  // namespace aec::nn
