#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "aec/nn/layers.hpp"

namespace aec::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First and second moments for every weight and bias tensor, in the order
// the parameters are presented to adam_step.
template <typename Scalar>
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Tensor<Scalar>> first_moment;
  std::vector<Tensor<Scalar>> second_moment;

  // Lazily shaped on the first step.
  bool initialized() const { return !first_moment.empty(); }
};

// Bias-corrected Adam update over a list of layers; clears the gradients.
template <typename Scalar>
void adam_step(std::span<LayerParams<Scalar>* const> layers, AdamState<Scalar>& state) {
  const std::size_t tensors = layers.size() * 2;
  if (!state.initialized()) {
    for (LayerParams<Scalar>* p : layers) {
      for (const Tensor<Scalar>* t : {&p->weight, &p->bias}) {
        state.first_moment.push_back(Tensor<Scalar>::zeros_like(*t));
        state.second_moment.push_back(Tensor<Scalar>::zeros_like(*t));
      }
    }
  }
  if (state.first_moment.size() != tensors) {
    throw DimensionError("adam_step: optimizer state holds " + std::to_string(state.first_moment.size()) +
                         " tensors, model has " + std::to_string(tensors));
  }
  ++state.step;
  const AdamConfig& c = state.config;
  const double t = static_cast<double>(state.step);
  const auto b1 = static_cast<Scalar>(c.beta1);
  const auto b2 = static_cast<Scalar>(c.beta2);
  const auto correction1 = static_cast<Scalar>(1.0 - std::pow(c.beta1, t));
  const auto correction2 = static_cast<Scalar>(1.0 - std::pow(c.beta2, t));
  const auto lr = static_cast<Scalar>(c.learning_rate);
  const auto eps = static_cast<Scalar>(c.epsilon);

  std::size_t slot = 0;
  for (LayerParams<Scalar>* p : layers) {
    const std::pair<Tensor<Scalar>*, Tensor<Scalar>*> pairs[] = {{&p->weight, &p->grad_weight},
                                                                 {&p->bias, &p->grad_bias}};
    for (const auto& [param, grad] : pairs) {
      auto& m = state.first_moment[slot].array();
      auto& v = state.second_moment[slot].array();
      if (m.size() != param->size()) {
        throw DimensionError("adam_step: moment shape does not match parameter shape");
      }
      const auto& g = grad->array();
      m = b1 * m + (Scalar(1) - b1) * g;
      v = b2 * v + (Scalar(1) - b2) * g.square();
      param->array() -= lr * (m / correction1) / ((v / correction2).sqrt() + eps);
      grad->fill(Scalar(0));
      ++slot;
    }
  }
}

}  // namespace aec::nn
