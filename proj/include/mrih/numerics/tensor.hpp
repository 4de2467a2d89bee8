#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mrih/error.hpp"

namespace mrih {

using cdouble = std::complex<double>;
using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << ']';
  return os.str();
}

/// Dense row-major tensor. Complex tensors store std::complex<double>, which is
/// layout-compatible with interleaved (re, im) float64 pairs.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T{}) : shape_(std::move(shape)), data_(numel(shape_), fill) {}
  Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != numel(shape_)) {
      throw ValueError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + to_string(shape_));
    }
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  const T& at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
  T& at(std::size_t c, std::size_t i, std::size_t j) { return data_[(c * shape_[1] + i) * shape_[2] + j]; }
  const T& at(std::size_t c, std::size_t i, std::size_t j) const {
    return data_[(c * shape_[1] + i) * shape_[2] + j];
  }

  /// Same data, new shape with equal element count.
  Tensor reshaped(Shape shape) const {
    if (numel(shape) != size()) {
      throw ValueError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
    }
    return Tensor(std::move(shape), data_);
  }

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

using RealTensor = Tensor<double>;
using ComplexTensor = Tensor<cdouble>;

inline void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b) {
    throw ValueError(std::string(what) + ": shape mismatch " + to_string(a) + " vs " + to_string(b));
  }
}

/// Spatial size (last two dims) of a tensor of rank >= 2.
inline std::pair<std::size_t, std::size_t> spatial_dims(const Shape& s) {
  if (s.size() < 2) throw ValueError("expected at least two spatial dimensions, got " + to_string(s));
  return {s[s.size() - 2], s[s.size() - 1]};
}

ComplexTensor to_complex(const RealTensor& re);
ComplexTensor to_complex(const RealTensor& re, const RealTensor& im);
RealTensor real_part(const ComplexTensor& z);
RealTensor imag_part(const ComplexTensor& z);
RealTensor abs(const ComplexTensor& z);

double max_value(const RealTensor& x);
double max_abs(const RealTensor& x);
double sum_squares(const RealTensor& x);
double sum_squares(const ComplexTensor& x);
bool all_finite(const RealTensor& x);
bool all_finite(const ComplexTensor& x);

}  // namespace mrih
