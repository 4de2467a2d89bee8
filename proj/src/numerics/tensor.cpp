#include "mrih/numerics/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mrih {

ComplexTensor to_complex(const RealTensor& re) {
  ComplexTensor out(re.shape());
  for (std::size_t i = 0; i < re.size(); ++i) out[i] = cdouble(re[i], 0.0);
  return out;
}

ComplexTensor to_complex(const RealTensor& re, const RealTensor& im) {
  require_same_shape(re.shape(), im.shape(), "to_complex");
  ComplexTensor out(re.shape());
  for (std::size_t i = 0; i < re.size(); ++i) out[i] = cdouble(re[i], im[i]);
  return out;
}

RealTensor real_part(const ComplexTensor& z) {
  RealTensor out(z.shape());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i].real();
  return out;
}

RealTensor imag_part(const ComplexTensor& z) {
  RealTensor out(z.shape());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i].imag();
  return out;
}

RealTensor abs(const ComplexTensor& z) {
  RealTensor out(z.shape());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = std::abs(z[i]);
  return out;
}

double max_value(const RealTensor& x) {
  if (x.empty()) throw ValueError("max_value of empty tensor");
  return *std::max_element(x.data().begin(), x.data().end());
}

double max_abs(const RealTensor& x) {
  double m = 0.0;
  for (double v : x.data()) m = std::max(m, std::abs(v));
  return m;
}

double sum_squares(const RealTensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v * v;
  return s;
}

double sum_squares(const ComplexTensor& x) {
  double s = 0.0;
  for (const cdouble& v : x.data()) s += std::norm(v);
  return s;
}

bool all_finite(const RealTensor& x) {
  return std::all_of(x.data().begin(), x.data().end(), [](double v) { return std::isfinite(v); });
}

bool all_finite(const ComplexTensor& x) {
  return std::all_of(x.data().begin(), x.data().end(),
                     [](const cdouble& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
}

}  // namespace mrih
