#include "mrih/recon/tv.hpp"

#include <cmath>

#include "mrih/mri/forward.hpp"
#include "mrih/numerics/fft.hpp"

namespace mrih::recon {

namespace {

void check(const ComplexTensor& z, const mri::Acquisition& acq, const TvParams& p) {
  if (!(p.lambda > 0.0)) throw ValueError("tv_reconstruct: lambda must be > 0");
  if (p.iters < 1) throw ValueError("tv_reconstruct: iters must be >= 1");
  if (!(p.eps > 0.0)) throw ValueError("tv_reconstruct: eps must be > 0");
  if (z.shape() != acq.maps.maps.shape()) {
    throw ValueError("tv_reconstruct: k-space " + to_string(z.shape()) + " does not match coil maps " +
                     to_string(acq.maps.maps.shape()));
  }
}

// Phi x = mask .* fft2c(maps .* x)
ComplexTensor forward(const ComplexTensor& x, const mri::Acquisition& acq) {
  const ComplexTensor& m = acq.maps.maps;
  ComplexTensor coil(m.shape());
  for (std::size_t k = 0; k < coil.size(); ++k) coil[k] = m[k] * x[k % x.size()];
  ComplexTensor y = fft2c(coil);
  mri::apply_mask(y, acq.mask);
  return y;
}

// Phi^H r = sum_c conj(maps_c) .* ifft2c(mask .* r)_c
ComplexTensor adjoint(ComplexTensor r, const mri::Acquisition& acq) {
  mri::apply_mask(r, acq.mask);
  const ComplexTensor img = ifft2c(r);
  const ComplexTensor& m = acq.maps.maps;
  ComplexTensor x({m.dim(1), m.dim(2)});
  for (std::size_t k = 0; k < img.size(); ++k) x[k % x.size()] += std::conj(m[k]) * img[k];
  return x;
}

// Smoothed TV value and, optionally, its gradient in the (Re, Im) convention.
double smoothed_tv(const ComplexTensor& x, double eps, ComplexTensor* grad) {
  const std::size_t h = x.dim(0), w = x.dim(1);
  double total = 0.0;
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      const cdouble dv = i + 1 < h ? x.at(i + 1, j) - x.at(i, j) : cdouble(0.0);
      const cdouble dh = j + 1 < w ? x.at(i, j + 1) - x.at(i, j) : cdouble(0.0);
      const double mag = std::sqrt(std::norm(dv) + std::norm(dh) + eps * eps);
      total += mag;
      if (grad != nullptr) {
        const cdouble gv = dv / mag;
        const cdouble gh = dh / mag;
        if (i + 1 < h) {
          grad->at(i + 1, j) += gv;
          grad->at(i, j) -= gv;
        }
        if (j + 1 < w) {
          grad->at(i, j + 1) += gh;
          grad->at(i, j) -= gh;
        }
      }
    }
  }
  return total;
}

}  // namespace

double tv_objective(const ComplexTensor& x, const ComplexTensor& z, const mri::Acquisition& acq,
                    const TvParams& params) {
  const ComplexTensor r = forward(x, acq);
  double data = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) data += std::norm(r[k] - z[k]);
  return 0.5 * data + params.lambda * smoothed_tv(x, params.eps, nullptr);
}

TvResult tv_reconstruct(const ComplexTensor& z, const mri::Acquisition& acq, const TvParams& params) {
  check(z, acq, params);
  const double step = 1.0 / (1.0 + 8.0 * params.lambda / params.eps);

  TvResult out;
  ComplexTensor x = adjoint(z, acq);
  out.objective.reserve(params.iters + 1);
  out.objective.push_back(tv_objective(x, z, acq, params));
  for (std::size_t it = 0; it < params.iters; ++it) {
    ComplexTensor resid = forward(x, acq);
    for (std::size_t k = 0; k < resid.size(); ++k) resid[k] -= z[k];
    ComplexTensor grad = adjoint(std::move(resid), acq);
    ComplexTensor tv_grad(x.shape());
    smoothed_tv(x, params.eps, &tv_grad);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] -= step * (grad[k] + params.lambda * tv_grad[k]);

    const double f = tv_objective(x, z, acq, params);
    if (!std::isfinite(f) || f > out.objective.back() + 1e-12) out.stable = false;
    out.objective.push_back(f);
  }
  out.image = abs(x);
  out.estimate = std::move(x);
  return out;
}

}  // namespace mrih::recon
