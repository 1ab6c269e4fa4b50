#pragma once

#include <cassert>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "aec/errors.hpp"

namespace aec::nn {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

inline Index shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

// Dense row-major array. Rank-3 tensors [batch, channels, length] are the
// common case; rows(b) views one example as a (channels x length) matrix.
template <typename Scalar>
class Tensor {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using RowMajor = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using RowsMap = Eigen::Map<RowMajor>;
  using ConstRowsMap = Eigen::Map<const RowMajor>;

  Tensor() = default;
  explicit Tensor(Shape shape) : shape_(std::move(shape)), data_(Array::Zero(shape_size(shape_))) {}
  Tensor(Shape shape, Array data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_size(shape_)) {
      throw DimensionError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                           shape_string(shape_));
    }
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index dim(Index axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
  Index size() const { return data_.size(); }

  Array& array() { return data_; }
  const Array& array() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Scalar& operator[](Index i) { return data_[i]; }
  Scalar operator[](Index i) const { return data_[i]; }

  // Element access for rank-3 tensors.
  Scalar& operator()(Index b, Index c, Index l) { return data_[(b * shape_[1] + c) * shape_[2] + l]; }
  Scalar operator()(Index b, Index c, Index l) const { return data_[(b * shape_[1] + c) * shape_[2] + l]; }

  // Example b of a rank-3 tensor as a (channels x length) array.
  RowsMap rows(Index b) {
    return RowsMap(data_.data() + b * shape_[1] * shape_[2], shape_[1], shape_[2]);
  }
  ConstRowsMap rows(Index b) const {
    return ConstRowsMap(data_.data() + b * shape_[1] * shape_[2], shape_[1], shape_[2]);
  }

  Tensor reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape_, data_.template cast<Other>());
  }

  void fill(Scalar v) { data_.setConstant(v); }
  bool all_finite() const { return data_.allFinite(); }

 private:
  Shape shape_;
  Array data_;
};

inline void require_rank(const Shape& shape, Index rank, const char* what) {
  if (static_cast<Index>(shape.size()) != rank) {
    throw DimensionError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got shape " +
                         shape_string(shape));
  }
}

inline void require_axis(const Shape& shape, Index axis, Index expected, const char* what, const char* axis_name) {
  if (shape.at(static_cast<std::size_t>(axis)) != expected) {
    throw DimensionError(std::string(what) + ": " + axis_name + " axis is " +
                         std::to_string(shape[static_cast<std::size_t>(axis)]) + ", expected " +
                         std::to_string(expected) + " (shape " + shape_string(shape) + ")");
  }
}

// Debug-build NaN/Inf guard after every op.
template <typename Scalar>
inline void debug_check_finite([[maybe_unused]] const Tensor<Scalar>& t, [[maybe_unused]] const char* op) {
#ifndef NDEBUG
  if (!t.all_finite()) throw Error(std::string("non-finite values produced by ") + op);
#endif
}

}  // namespace aec::nn
