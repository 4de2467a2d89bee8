#include <cmath>

#include "doctest.h"
#include "mrih/numerics/fft.hpp"
#include "oracles.hpp"

using namespace mrih;

namespace {

double max_abs_diff(const ComplexTensor& a, const ComplexTensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double norm(const ComplexTensor& a) { return std::sqrt(sum_squares(a)); }

}  // namespace

TEST_CASE("centered delta maps to a flat spectrum") {
  ComplexTensor x({8, 8});
  x.at(4, 4) = 1.0;
  const ComplexTensor y = fft2c(x);
  for (const cdouble& v : y.data()) CHECK(std::abs(std::abs(v) - 1.0 / 8.0) < 1e-15);
}

TEST_CASE("zero in, zero out") {
  const ComplexTensor x({2, 8, 8});
  CHECK(fft2c(x) == x);
  CHECK(ifft2c(x) == x);
}

TEST_CASE("flat spectrum inverts to a centered delta") {
  ComplexTensor y({8, 8}, cdouble(1.0 / 8.0, 0.0));
  const ComplexTensor x = ifft2c(y);
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t j = 0; j < 8; ++j) {
      const double expected = (i == 4 && j == 4) ? 1.0 : 0.0;
      CHECK(std::abs(x.at(i, j) - expected) < 1e-15);
    }
  }
}

TEST_CASE("fft2c matches the direct DFT sum") {
  Rng rng(11);
  for (std::size_t n : {4U, 8U}) {
    const ComplexTensor x = oracle::random_complex({n, n}, rng);
    CHECK(max_abs_diff(fft2c(x), oracle::dft2c(x)) < 1e-12);
    CHECK(max_abs_diff(ifft2c(x), oracle::dft2c(x, true)) < 1e-12);
  }
  // Non-square, batched.
  const ComplexTensor x = oracle::random_complex({3, 4, 8}, rng);
  CHECK(max_abs_diff(fft2c(x), oracle::dft2c(x)) < 1e-12);
}

TEST_CASE("round trip, Parseval, linearity and adjointness") {
  Rng rng(5);
  const ComplexTensor x = oracle::random_complex({16, 16}, rng);
  const ComplexTensor y = oracle::random_complex({16, 16}, rng);
  const ComplexTensor fx = fft2c(x);
  CHECK(max_abs_diff(ifft2c(fx), x) / norm(x) < 1e-10);
  CHECK(std::abs(norm(fx) - norm(x)) / norm(x) < 1e-10);

  const cdouble a(0.3, -1.2), b(-2.0, 0.5);
  ComplexTensor combo(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) combo[i] = a * x[i] + b * y[i];
  const ComplexTensor fy = fft2c(y);
  ComplexTensor expected(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) expected[i] = a * fx[i] + b * fy[i];
  CHECK(max_abs_diff(fft2c(combo), expected) < 1e-10);

  // <F x, y> = <x, F^-1 y>
  const ComplexTensor iy = ifft2c(y);
  cdouble lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    lhs += fx[i] * std::conj(y[i]);
    rhs += x[i] * std::conj(iy[i]);
  }
  CHECK(std::abs(lhs - rhs) < 1e-10);
}

TEST_CASE("non power of two sizes are rejected") {
  CHECK_THROWS_AS(fft2c(ComplexTensor({6, 8})), ValueError);
  CHECK_THROWS_AS(ifft2c(ComplexTensor({8, 12})), ValueError);
  CHECK_THROWS_AS(fft2c(ComplexTensor({8})), ValueError);
}

TEST_CASE("deterministic") {
  Rng rng(3);
  const ComplexTensor x = oracle::random_complex({2, 16, 16}, rng);
  CHECK(fft2c(x) == fft2c(x));
}
