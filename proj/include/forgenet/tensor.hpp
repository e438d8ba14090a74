#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "forgenet/error.hpp"

namespace forgenet {

struct Shape4 {
  std::size_t n = 1;
  std::size_t c = 1;
  std::size_t h = 1;
  std::size_t w = 1;

  std::size_t count() const noexcept { return n * c * h * w; }
  std::size_t sample_size() const noexcept { return c * h * w; }
  std::size_t plane_size() const noexcept { return h * w; }

  friend bool operator==(const Shape4&, const Shape4&) = default;
};

struct Shape2 {
  std::size_t rows = 1;
  std::size_t cols = 1;

  std::size_t count() const noexcept { return rows * cols; }

  friend bool operator==(const Shape2&, const Shape2&) = default;
};

std::string to_string(const Shape4& shape);
std::string to_string(const Shape2& shape);

// Throws a shape error if any dimension is zero.
void validate(const Shape4& shape);
void validate(const Shape2& shape);

/// Dense (n, c, h, w) array, row-major. T is float for model state and
/// double for the gradient-checking shadow path.
template <typename T>
class BasicTensor4 {
 public:
  using value_type = T;

  BasicTensor4() = default;
  explicit BasicTensor4(const Shape4& shape) : shape_(shape) {
    validate(shape);
    data_.assign(shape.count(), T{0});
  }
  BasicTensor4(const Shape4& shape, std::vector<T> data)
      : shape_(shape), data_(std::move(data)) {
    validate(shape);
    if (data_.size() != shape.count())
      fail(ErrorKind::Shape, "tensor " + to_string(shape) + " needs " +
                                 std::to_string(shape.count()) +
                                 " values, got " + std::to_string(data_.size()));
  }

  const Shape4& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  std::size_t index(std::size_t i, std::size_t c, std::size_t y,
                    std::size_t x) const noexcept {
    return ((i * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }
  T& operator()(std::size_t i, std::size_t c, std::size_t y, std::size_t x) noexcept {
    return data_[index(i, c, y, x)];
  }
  T operator()(std::size_t i, std::size_t c, std::size_t y,
               std::size_t x) const noexcept {
    return data_[index(i, c, y, x)];
  }
  T& operator[](std::size_t flat) noexcept { return data_[flat]; }
  T operator[](std::size_t flat) const noexcept { return data_[flat]; }

  // Pointer to the contiguous (h, w) plane of sample i, channel c.
  T* plane(std::size_t i, std::size_t c) noexcept {
    return data_.data() + (i * shape_.c + c) * shape_.plane_size();
  }
  const T* plane(std::size_t i, std::size_t c) const noexcept {
    return data_.data() + (i * shape_.c + c) * shape_.plane_size();
  }

  friend bool operator==(const BasicTensor4&, const BasicTensor4&) = default;

 private:
  Shape4 shape_{0, 0, 0, 0};
  std::vector<T> data_;
};

template <typename T>
class BasicTensor2 {
 public:
  using value_type = T;

  BasicTensor2() = default;
  explicit BasicTensor2(const Shape2& shape) : shape_(shape) {
    validate(shape);
    data_.assign(shape.count(), T{0});
  }
  BasicTensor2(const Shape2& shape, std::vector<T> data)
      : shape_(shape), data_(std::move(data)) {
    validate(shape);
    if (data_.size() != shape.count())
      fail(ErrorKind::Shape, "tensor " + to_string(shape) + " needs " +
                                 std::to_string(shape.count()) +
                                 " values, got " + std::to_string(data_.size()));
  }

  const Shape2& shape() const noexcept { return shape_; }
  std::size_t rows() const noexcept { return shape_.rows; }
  std::size_t cols() const noexcept { return shape_.cols; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * shape_.cols + c]; }
  T operator()(std::size_t r, std::size_t c) const noexcept {
    return data_[r * shape_.cols + c];
  }
  T& operator[](std::size_t flat) noexcept { return data_[flat]; }
  T operator[](std::size_t flat) const noexcept { return data_[flat]; }

  const T* row(std::size_t r) const noexcept { return data_.data() + r * shape_.cols; }
  T* row(std::size_t r) noexcept { return data_.data() + r * shape_.cols; }

  friend bool operator==(const BasicTensor2&, const BasicTensor2&) = default;

 private:
  Shape2 shape_{0, 0};
  std::vector<T> data_;
};

using Tensor4 = BasicTensor4<float>;
using Tensor2 = BasicTensor2<float>;

template <typename T>
BasicTensor4<T> zeros(const Shape4& shape) {
  return BasicTensor4<T>(shape);
}

inline Tensor4 zeros(const Shape4& shape) { return zeros<float>(shape); }

// (n, c, h, w) -> (n, c*h*w); the (c, h, w) order fixes dense weight indexing.
template <typename T>
BasicTensor2<T> flatten(const BasicTensor4<T>& x) {
  const Shape4& s = x.shape();
  return BasicTensor2<T>(Shape2{s.n, s.sample_size()}, x.values());
}

template <typename T>
BasicTensor4<T> unflatten(const BasicTensor2<T>& x, const Shape4& shape) {
  validate(shape);
  if (x.rows() != shape.n || x.cols() != shape.sample_size())
    fail(ErrorKind::Shape,
         "cannot unflatten " + to_string(x.shape()) + " into " + to_string(shape));
  return BasicTensor4<T>(shape, x.values());
}

template <typename T, typename F>
BasicTensor4<T> map_elementwise(const BasicTensor4<T>& x, F&& f) {
  BasicTensor4<T> out = x;
  for (T& v : out.data()) v = f(v);
  return out;
}

template <typename T>
bool all_finite(std::span<const T> values) noexcept;

extern template bool all_finite<float>(std::span<const float>) noexcept;
extern template bool all_finite<double>(std::span<const double>) noexcept;

// Element type conversion, used to lift float state onto the double path.
template <typename To, typename From>
BasicTensor4<To> cast(const BasicTensor4<From>& x) {
  std::vector<To> out(x.values().begin(), x.values().end());
  return BasicTensor4<To>(x.shape(), std::move(out));
}

}  // namespace forgenet
