// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "p2be/error.hpp"

namespace p2be::numgraph {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

/// Dense row-major tensor. The scalar is float for training; the double
/// instantiation exists for gradient oracles.
template <class T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;

  explicit BasicTensor(Shape shape, T fill = T{0})
      : shape_(std::move(shape)), data_(checked_size(shape_), fill) {}

  BasicTensor(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_size(shape_) != data_.size()) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_string(shape_));
    }
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](T v) { return std::isfinite(v); });
  }

  /// Same data, new shape of equal element count.
  BasicTensor reshaped(Shape shape) const {
    return BasicTensor(std::move(shape), data_);
  }

  template <class U>
  BasicTensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return BasicTensor<U>(shape_, std::move(out));
  }

  friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

 private:
  static std::size_t checked_size(const Shape& shape) {
    for (std::size_t d : shape) {
      if (d == 0) {
        throw ShapeError("tensor dimensions must be positive, got " +
                         shape_string(shape));
      }
    }
    return shape_size(shape);
  }

  Shape shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;

/// Stacks equally shaped tensors along a new leading axis.
template <class T>
BasicTensor<T> stack(std::span<const BasicTensor<T>> items) {
  if (items.empty()) throw ShapeError("stack of zero tensors");
  Shape shape = items.front().shape();
  std::vector<T> data;
  data.reserve(items.size() * items.front().size());
  for (const auto& t : items) {
    if (t.shape() != shape) {
      throw ShapeError("stack: shape " + shape_string(t.shape()) +
                       " differs from " + shape_string(shape));
    }
    data.insert(data.end(), t.data().begin(), t.data().end());
  }
  shape.insert(shape.begin(), items.size());
  return BasicTensor<T>(std::move(shape), std::move(data));
}

/// Rows [begin, end) of the leading axis.
template <class T>
BasicTensor<T> slice_rows(const BasicTensor<T>& t, std::size_t begin,
                          std::size_t end) {
  if (t.rank() == 0 || begin >= end || end > t.dim(0)) {
    throw ShapeError("slice_rows: invalid range on shape " +
                     shape_string(t.shape()));
  }
  const std::size_t row = t.size() / t.dim(0);
  Shape shape = t.shape();
  shape[0] = end - begin;
  std::vector<T> data(t.data().begin() + begin * row,
                      t.data().begin() + end * row);
  return BasicTensor<T>(std::move(shape), std::move(data));
}

/// Concatenates along the leading axis.
template <class T>
BasicTensor<T> concat_rows(std::span<const BasicTensor<T>> items) {
  if (items.empty()) throw ShapeError("concat of zero tensors");
  Shape tail(items.front().shape().begin() + 1, items.front().shape().end());
  std::size_t rows = 0;
  std::vector<T> data;
  for (const auto& t : items) {
    if (Shape(t.shape().begin() + 1, t.shape().end()) != tail) {
      throw ShapeError("concat_rows: trailing shape mismatch");
    }
    rows += t.dim(0);
    data.insert(data.end(), t.data().begin(), t.data().end());
  }
  Shape shape = tail;
  shape.insert(shape.begin(), rows);
  return BasicTensor<T>(std::move(shape), std::move(data));
}

}  // namespace p2be::numgraph
