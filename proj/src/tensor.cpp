#include "forgenet/tensor.hpp"

#include <cmath>

namespace forgenet {

std::string to_string(const Shape4& s) {
  return "(" + std::to_string(s.n) + "," + std::to_string(s.c) + "," +
         std::to_string(s.h) + "," + std::to_string(s.w) + ")";
}

std::string to_string(const Shape2& s) {
  return "(" + std::to_string(s.rows) + "," + std::to_string(s.cols) + ")";
}

void validate(const Shape4& s) {
  if (s.n == 0 || s.c == 0 || s.h == 0 || s.w == 0)
    fail(ErrorKind::Shape, "zero dimension in shape " + to_string(s));
}

void validate(const Shape2& s) {
  if (s.rows == 0 || s.cols == 0)
    fail(ErrorKind::Shape, "zero dimension in shape " + to_string(s));
}

template <typename T>
bool all_finite(std::span<const T> values) noexcept {
  for (T v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

template bool all_finite<float>(std::span<const float>) noexcept;
template bool all_finite<double>(std::span<const double>) noexcept;

}  // namespace forgenet
