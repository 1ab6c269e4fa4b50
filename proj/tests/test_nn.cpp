#include <gtest/gtest.h>

#include <random>

#include "aec/nn/adam.hpp"
#include "aec/nn/layers.hpp"
#include "oracles.hpp"

using namespace aec;
using namespace aec::nn;
using aec::test::direct_conv1d;
using aec::test::direct_conv1d_transposed;
using aec::test::dot;
using aec::test::numeric_gradient;
using aec::test::random_params;
using aec::test::random_tensor;
using aec::test::relative_error;

namespace {

struct ConvCase {
  Index batch, in_ch, out_ch, length, kernel;
};

const ConvCase kConvCases[] = {
    {1, 1, 1, 4, 2},    {2, 3, 4, 17, 5},  {1, 2, 3, 9, 12},   // kernel longer than input
    {3, 2, 2, 1200, 7},                                        // several overlap-save tiles
    {1, 4, 3, 64, 30},  {2, 1, 5, 40, 1},
};

}  // namespace

TEST(Conv1d, KernelOfOneIsIdentity) {
  LayerParams<float> p({1, 1, 1}, {1});
  p.weight[0] = 1.0f;
  Tensor<float> x({1, 1, 5}, (Tensor<float>::Array(5) << 1, -2, 3, 4.5f, 0).finished());
  const auto y = conv1d(x, p);
  EXPECT_LT(relative_error(x, y), 1e-6);
}

TEST(Conv1d, EvenKernelPadsRightForSingleExtraTap) {
  // Same padding for K=2 is (0 left, 1 right): y[n] = x[n] + x[n+1].
  LayerParams<double> p({1, 1, 2}, {1});
  p.weight.fill(1.0);
  Tensor<double> x({1, 1, 4}, (Tensor<double>::Array(4) << 1, 2, 3, 4).finished());
  const auto expected = direct_conv1d(x, p);
  EXPECT_DOUBLE_EQ(expected[0], 3.0);
  EXPECT_DOUBLE_EQ(expected[3], 4.0);
  const auto y = conv1d(x, p);
  for (Index i = 0; i < 4; ++i) EXPECT_NEAR(y[i], expected[i], 1e-12);
}

TEST(Conv1d, MatchesDirectSlidingWindow) {
  std::mt19937_64 rng(7);
  for (const auto& c : kConvCases) {
    auto p = random_params<double>({c.out_ch, c.in_ch, c.kernel}, {c.out_ch}, rng);
    auto x = random_tensor<double>({c.batch, c.in_ch, c.length}, rng);
    EXPECT_LT(relative_error(conv1d(x, p), direct_conv1d(x, p)), 1e-12) << "L=" << c.length << " K=" << c.kernel;
  }
}

TEST(Conv1d, TransposedMatchesDirectAdjoint) {
  std::mt19937_64 rng(8);
  for (const auto& c : kConvCases) {
    auto p = random_params<double>({c.in_ch, c.out_ch, c.kernel}, {c.out_ch}, rng);
    auto y = random_tensor<double>({c.batch, c.in_ch, c.length}, rng);
    EXPECT_LT(relative_error(conv1d_transposed(y, p), direct_conv1d_transposed(y, p)), 1e-12);
  }
}

TEST(Conv1d, AdjointInnerProductIdentity) {
  std::mt19937_64 rng(9);
  for (const auto& c : kConvCases) {
    auto p = random_params<float>({c.out_ch, c.in_ch, c.kernel}, {c.out_ch}, rng);
    p.bias.fill(0.0f);
    LayerParams<float> pt({c.out_ch, c.in_ch, c.kernel}, {c.in_ch});
    pt.weight = p.weight;
    auto x = random_tensor<float>({c.batch, c.in_ch, c.length}, rng);
    auto y = random_tensor<float>({c.batch, c.out_ch, c.length}, rng);
    const double lhs = dot(conv1d(x, p), y);
    const double rhs = dot(x, conv1d_transposed(y, pt));
    EXPECT_NEAR(lhs, rhs, 1e-4 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(Conv1d, TransposedKernelOfOneIsIdentity) {
  LayerParams<float> p({1, 1, 1}, {1});
  p.weight[0] = 1.0f;
  std::mt19937_64 rng(1);
  auto x = random_tensor<float>({2, 1, 9}, rng);
  EXPECT_LT(relative_error(conv1d_transposed(x, p), x), 1e-6);
}

TEST(Conv1d, RejectsChannelMismatch) {
  LayerParams<float> p({2, 3, 5}, {2});
  Tensor<float> x({1, 2, 10});
  EXPECT_THROW(conv1d(x, p), DimensionError);
}

// Loss = <layer(x), R> for a fixed random R, so dL/dout = R.
template <typename S>
void check_conv_gradients(bool transposed, double eps, double tol, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Index B = 2, Ci = 3, Co = 2, L = 13, K = 4;
  const Shape wshape = transposed ? Shape{Ci, Co, K} : Shape{Co, Ci, K};
  auto params = random_params<S>(wshape, {Co}, rng);
  auto x = random_tensor<S>({B, Ci, L}, rng);
  const auto R = random_tensor<S>({B, Co, L}, rng);

  auto run = [&](const LayerParams<S>& p, const Tensor<S>& in) {
    return transposed ? conv1d_transposed(in, p) : conv1d(in, p);
  };
  auto loss = [&] { return dot(run(params, x), R); };

  Tensor<S> dx;
  LayerParams<S> grads = params;
  grads.zero_grad();
  if (transposed) {
    Conv1dTransposed<S> layer(params, L);
    ConvCache<S> cache;
    layer.forward(x, &cache);
    dx = layer.backward(R, cache);
    grads = layer.params;
  } else {
    Conv1d<S> layer(params, L);
    ConvCache<S> cache;
    layer.forward(x, &cache);
    dx = layer.backward(R, cache);
    grads = layer.params;
  }
  EXPECT_LT(relative_error(dx, numeric_gradient<S>(loss, x, eps)), tol);
  EXPECT_LT(relative_error(grads.grad_weight, numeric_gradient<S>(loss, params.weight, eps)), tol);
  EXPECT_LT(relative_error(grads.grad_bias, numeric_gradient<S>(loss, params.bias, eps)), tol);
}

TEST(GradientCheck, Conv1dDouble) { check_conv_gradients<double>(false, 1e-5, 1e-6, 11); }
TEST(GradientCheck, Conv1dFloat) { check_conv_gradients<float>(false, 1e-2, 1e-3, 12); }
TEST(GradientCheck, Conv1dTransposedDouble) { check_conv_gradients<double>(true, 1e-5, 1e-6, 13); }
TEST(GradientCheck, Conv1dTransposedFloat) { check_conv_gradients<float>(true, 1e-2, 1e-3, 14); }

TEST(IQMixer, SelectsRowsWithUnitKernels) {
  std::mt19937_64 rng(3);
  auto x = random_tensor<float>({1, 2, 8}, rng);
  IQMixer<float> mixer(1);
  mixer.params.weight.fill(0.0f);
  mixer.params.weight[0] = 1.0f;  // [[1,0],[0,0]]
  auto y = mixer.forward(x);
  for (Index t = 0; t < 8; ++t) EXPECT_FLOAT_EQ(y(0, 0, t), x(0, 0, t));
  mixer.params.weight.fill(0.0f);
  mixer.params.weight[2] = 1.0f;  // [[0,0],[1,0]]
  y = mixer.forward(x);
  for (Index t = 0; t < 8; ++t) EXPECT_FLOAT_EQ(y(0, 0, t), x(0, 1, t));
}

TEST(IQMixer, RejectsHeightOtherThanTwo) {
  IQMixer<float> mixer(1);
  Tensor<float> x({1, 3, 8});
  EXPECT_THROW(mixer.forward(x), DimensionError);
}

template <typename S>
void check_mixer_gradients(double eps, double tol) {
  std::mt19937_64 rng(21);
  IQMixer<S> mixer(3);
  mixer.params = random_params<S>({3, 1, 2, 2}, {3}, rng);
  auto x = random_tensor<S>({2, 2, 11}, rng);
  const auto R = random_tensor<S>({2, 3, 11}, rng);
  auto loss = [&] { return dot(mixer.forward(x), R); };
  auto layer = mixer;
  layer.params.zero_grad();
  const auto dx = layer.backward(x, R);
  EXPECT_LT(relative_error(dx, numeric_gradient<S>(loss, x, eps)), tol);
  EXPECT_LT(relative_error(layer.params.grad_weight, numeric_gradient<S>(loss, mixer.params.weight, eps)), tol);
  EXPECT_LT(relative_error(layer.params.grad_bias, numeric_gradient<S>(loss, mixer.params.bias, eps)), tol);

  IQUnmixer<S> unmixer(3);
  unmixer.params = random_params<S>({3, 1, 2, 2}, {1}, rng);
  auto h = random_tensor<S>({2, 3, 11}, rng);
  const auto R2 = random_tensor<S>({2, 2, 11}, rng);
  auto loss2 = [&] { return dot(unmixer.forward(h), R2); };
  auto ulayer = unmixer;
  ulayer.params.zero_grad();
  const auto dh = ulayer.backward(h, R2);
  EXPECT_LT(relative_error(dh, numeric_gradient<S>(loss2, h, eps)), tol);
  EXPECT_LT(relative_error(ulayer.params.grad_weight, numeric_gradient<S>(loss2, unmixer.params.weight, eps)), tol);
  EXPECT_LT(relative_error(ulayer.params.grad_bias, numeric_gradient<S>(loss2, unmixer.params.bias, eps)), tol);
}

TEST(GradientCheck, IQMixAndUnmixDouble) { check_mixer_gradients<double>(1e-6, 1e-6); }
TEST(GradientCheck, IQMixAndUnmixFloat) { check_mixer_gradients<float>(1e-2, 1e-3); }

TEST(IQUnmixer, IsAdjointOfMixerWithoutBias) {
  std::mt19937_64 rng(5);
  IQMixer<double> mixer(2);
  mixer.params = random_params<double>({2, 1, 2, 2}, {2}, rng);
  mixer.params.bias.fill(0.0);
  IQUnmixer<double> unmixer(2);
  unmixer.params.weight = mixer.params.weight;
  auto x = random_tensor<double>({1, 2, 9}, rng);
  auto h = random_tensor<double>({1, 2, 9}, rng);
  EXPECT_NEAR(dot(mixer.forward(x), h), dot(x, unmixer.forward(h)), 1e-12);
}

TEST(MaxPool, ValuesAndIndices) {
  Tensor<float> x({1, 1, 4}, (Tensor<float>::Array(4) << 1, 3, 2, 4).finished());
  const auto r = maxpool(x, 2);
  EXPECT_FLOAT_EQ(r.values[0], 3.0f);
  EXPECT_FLOAT_EQ(r.values[1], 4.0f);
  EXPECT_EQ(r.indices.argmax, (std::vector<std::int32_t>{1, 3}));
}

TEST(MaxPool, TiesGoToFirstElement) {
  Tensor<float> x({1, 1, 4}, (Tensor<float>::Array(4) << 5, 5, 5, 5).finished());
  EXPECT_EQ(maxpool(x, 2).indices.argmax, (std::vector<std::int32_t>{0, 2}));
}

TEST(MaxPool, RejectsIndivisibleLength) {
  Tensor<float> x({1, 1, 5});
  EXPECT_THROW(maxpool(x, 2), DimensionError);
}

TEST(MaxUnpool, ScattersToRecordedPositions) {
  Tensor<float> x({1, 1, 4}, (Tensor<float>::Array(4) << 1, 3, 2, 4).finished());
  const auto r = maxpool(x, 2);
  const auto up = max_unpool(r.values, r.indices);
  const std::vector<float> expected{0, 3, 0, 4};
  for (Index i = 0; i < 4; ++i) EXPECT_FLOAT_EQ(up[i], expected[static_cast<std::size_t>(i)]);
}

TEST(MaxUnpool, PoolAfterUnpoolRecoversPooledValues) {
  // Holds whenever the window maxima are non-negative, since unpooling fills
  // the other slots with zeros.
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = random_tensor<float>({2, 3, 16}, rng);
    x.array() = x.array().abs();
    const auto r = maxpool(x, 2);
    const auto up = max_unpool(r.values, r.indices);
    EXPECT_FLOAT_EQ(up.array().square().sum(), r.values.array().square().sum());
    const auto again = maxpool(up, 2);
    EXPECT_TRUE((again.values.array() == r.values.array()).all());
    EXPECT_EQ(again.indices.argmax, r.indices.argmax);
  }
}

TEST(MaxUnpool, RejectsMismatchedIndices) {
  Tensor<float> x({1, 2, 4});
  const auto r = maxpool(x, 2);
  Tensor<float> wrong({1, 3, 2});
  EXPECT_THROW(max_unpool(wrong, r.indices), DimensionError);
}

TEST(GradientCheck, PoolingPathDouble) {
  // maxpool -> max_unpool with fixed indices, checked at a point away from ties.
  std::mt19937_64 rng(31);
  auto x = random_tensor<double>({2, 3, 12}, rng);
  const auto R = random_tensor<double>({2, 3, 12}, rng);
  const auto indices = maxpool(x, 2).indices;
  auto loss = [&] { return dot(max_unpool(maxpool(x, 2).values, indices), R); };
  const auto g = maxpool_backward(max_unpool_backward(R, indices), indices);
  EXPECT_LT(relative_error(g, numeric_gradient<double>(loss, x, 1e-6)), 1e-6);
}

TEST(GradientCheck, PoolingPathFloat) {
  std::mt19937_64 rng(32);
  auto x = random_tensor<float>({2, 3, 12}, rng);
  const auto R = random_tensor<float>({2, 3, 12}, rng);
  const auto indices = maxpool(x, 2).indices;
  auto loss = [&] { return dot(max_unpool(maxpool(x, 2).values, indices), R); };
  const auto g = maxpool_backward(max_unpool_backward(R, indices), indices);
  EXPECT_LT(relative_error(g, numeric_gradient<float>(loss, x, 1e-3)), 1e-3);
}

TEST(LeakyRelu, Definition) {
  Tensor<float> x({1, 1, 2}, (Tensor<float>::Array(2) << -1, 3).finished());
  const auto y = leaky_relu(x, 0.2f);
  EXPECT_FLOAT_EQ(y[0], -0.2f);
  EXPECT_FLOAT_EQ(y[1], 3.0f);
}

TEST(GradientCheck, LeakyReluAndMseDouble) {
  std::mt19937_64 rng(41);
  auto x = random_tensor<double>({2, 2, 10}, rng);
  const auto target = random_tensor<double>({2, 2, 10}, rng);
  auto loss = [&] { return mse_loss(leaky_relu(x, 0.2), target).loss; };
  const auto r = mse_loss(leaky_relu(x, 0.2), target);
  const auto g = leaky_relu_backward(x, r.grad, 0.2);
  EXPECT_LT(relative_error(g, numeric_gradient<double>(loss, x, 1e-6)), 1e-6);
}

TEST(GradientCheck, LeakyReluAndMseFloat) {
  std::mt19937_64 rng(42);
  auto x = random_tensor<float>({2, 2, 10}, rng);
  const auto target = random_tensor<float>({2, 2, 10}, rng);
  auto loss = [&] {
    const auto y = leaky_relu(x, 0.2f);
    return (y.array().cast<double>() - target.array().cast<double>()).square().mean();
  };
  const auto r = mse_loss(leaky_relu(x, 0.2f), target);
  const auto g = leaky_relu_backward(x, r.grad, 0.2f);
  EXPECT_LT(relative_error(g, numeric_gradient<float>(loss, x, 1e-3)), 1e-3);
}

TEST(MseLoss, Values) {
  Tensor<float> a({1, 1, 2}, (Tensor<float>::Array(2) << 0, 0).finished());
  Tensor<float> b({1, 1, 2}, (Tensor<float>::Array(2) << 2, 0).finished());
  EXPECT_FLOAT_EQ(mse_loss(a, a).loss, 0.0f);
  EXPECT_FLOAT_EQ(mse_loss(a, b).loss, 2.0f);
  Tensor<float> c({1, 2, 1});
  EXPECT_THROW(mse_loss(a, c), DimensionError);
}

TEST(Adam, ZeroGradientLeavesParametersAndCountsStep) {
  LayerParams<float> p({2, 1, 3}, {2});
  p.weight.fill(0.5f);
  const auto before = p.weight;
  AdamState<float> state;
  LayerParams<float>* layers[] = {&p};
  adam_step<float>(layers, state);
  EXPECT_EQ(state.step, 1u);
  EXPECT_EQ(relative_error(before, p.weight), 0.0);
}

TEST(Adam, FirstStepMatchesClosedForm) {
  // From a fresh state, m_hat = g and v_hat = g^2, so the update is
  // -lr * g / (|g| + eps).
  LayerParams<double> p({1, 1, 3}, {1});
  p.grad_weight[0] = 0.3;
  p.grad_weight[1] = -2.0;
  p.grad_weight[2] = 1e-9;
  AdamState<double> state;
  LayerParams<double>* layers[] = {&p};
  adam_step<double>(layers, state);
  const double lr = state.config.learning_rate, eps = state.config.epsilon;
  EXPECT_NEAR(p.weight[0], -lr * 0.3 / (0.3 + eps), 1e-15);
  EXPECT_NEAR(p.weight[1], lr * 2.0 / (2.0 + eps), 1e-15);
  EXPECT_NEAR(p.weight[2], -lr * 1e-9 / (1e-9 + eps), 1e-15);
  for (Index i = 0; i < 3; ++i) EXPECT_LE(std::abs(p.weight[i]), lr);
  EXPECT_EQ(p.grad_weight.array().abs().sum(), 0.0);  // cleared
}

TEST(Adam, RepeatedRunsAreBitIdentical) {
  auto run = [] {
    std::mt19937_64 rng(5);
    auto p = random_params<float>({3, 2, 4}, {3}, rng);
    AdamState<float> state;
    LayerParams<float>* layers[] = {&p};
    for (int s = 0; s < 10; ++s) {
      p.grad_weight = random_tensor<float>(p.weight.shape(), rng);
      p.grad_bias = random_tensor<float>(p.bias.shape(), rng);
      adam_step<float>(layers, state);
    }
    return p.weight;
  };
  const auto a = run(), b = run();
  EXPECT_TRUE((a.array() == b.array()).all());
}
