#include "mrih/recon/model.hpp"

#include <algorithm>
#include <cmath>

#include "mrih/mri/forward.hpp"
#include "mrih/numerics/conv.hpp"
#include "mrih/numerics/fft.hpp"
#include "mrih/numerics/rng.hpp"

namespace mrih::recon {

namespace {

constexpr double kNormFloor = 1e-12;
constexpr std::size_t kKernel = 3;

// Executors. Architectures below are written once against this interface.

struct TapeExec {
  using R = ad::Var;
  using C = ad::Var;
  ad::Tape& t;
  std::span<const ad::Var> p;

  R param(std::size_t i) const { return p[i]; }
  R constant(const RealTensor& v) { return t.constant(v); }
  C constant(const ComplexTensor& v) { return t.constant(v); }
  C fft2c(C x) { return t.fft2c(x); }
  C ifft2c(C x) { return t.ifft2c(x); }
  R rss(C x) { return t.rss(x); }
  R max(R x) { return t.max(x); }
  R add_scalar(R x, double c) { return t.add_scalar(x, c); }
  R divide_by(R x, R s) { return t.divide_by(x, s); }
  R scale_by(R x, R s) { return t.scale_by(x, s); }
  R reshape(R x, Shape s) { return t.reshape(x, std::move(s)); }
  R conv(R x, R k, R b) { return t.conv2d(x, k, b); }
  R relu(R x) { return t.relu(x); }
  R pool(R x) { return t.avg_pool2(x); }
  R upsample(R x) { return t.upsample2(x); }
  R concat(R a, R b) { return t.concat(a, b); }
  R add(R a, R b) { return t.add(a, b); }
  C sub(C a, C b) { return t.sub(a, b); }
  C mul_mask(C x, R m) { return t.mul_mask(x, m); }
  C expand_coils(C maps, R img) { return t.expand_coils(maps, img); }
};

struct EagerExec {
  using R = RealTensor;
  using C = ComplexTensor;
  std::span<const NamedTensor> p;

  const R& param(std::size_t i) const { return p[i].value; }
  const R& constant(const RealTensor& v) { return v; }
  const C& constant(const ComplexTensor& v) { return v; }
  C fft2c(const C& x) { return mrih::fft2c(x); }
  C ifft2c(const C& x) { return mrih::ifft2c(x); }
  R rss(const C& x) { return mri::rss_combine(x); }
  R max(const R& x) { return RealTensor({1}, {max_value(x)}); }
  R add_scalar(R x, double c) {
    for (auto& e : x.storage()) e += c;
    return x;
  }
  R divide_by(R x, const R& s) {
    const double sv = s[0];
    if (sv == 0.0) throw NumericError("divide_by: division by zero");
    for (auto& e : x.storage()) e /= sv;
    return x;
  }
  template <class T>
  Tensor<T> scale_by(Tensor<T> x, const R& s) {
    const double sv = s[0];
    for (auto& e : x.storage()) e *= sv;
    return x;
  }
  R reshape(const R& x, Shape s) { return x.reshaped(std::move(s)); }
  R conv(const R& x, const R& k, const R& b) { return mrih::conv2d(x, k, b); }
  R relu(const R& x) { return mrih::relu(x); }
  R pool(const R& x) { return mrih::avg_pool2(x); }
  R upsample(const R& x) { return mrih::upsample2(x); }
  R concat(const R& a, const R& b) {
    std::vector<double> data(a.storage());
    data.insert(data.end(), b.storage().begin(), b.storage().end());
    return RealTensor({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)}, std::move(data));
  }
  template <class T>
  Tensor<T> add(Tensor<T> a, const Tensor<T>& b) {
    require_same_shape(a.shape(), b.shape(), "add");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
  }
  C sub(C a, const C& b) {
    require_same_shape(a.shape(), b.shape(), "sub");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
    return a;
  }
  C mul_mask(C x, const R& m) {
    const std::size_t period = m.size();
    for (std::size_t i = 0; i < x.size(); ++i) x[i] *= m[i % period];
    return x;
  }
  C expand_coils(const C& maps, const R& img) {
    ComplexTensor out(maps.shape());
    const std::size_t plane = img.size();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = maps[i] * img[i % plane];
    return out;
  }
};

template <class Ex>
typename Ex::R zero_fill_graph(Ex& ex, const typename Ex::C& z) {
  return ex.rss(ex.ifft2c(z));
}

// Two-scale encoder/decoder on the max-normalized zero-fill image.
template <class Ex>
typename Ex::R unet_graph(Ex& ex, const typename Ex::C& z, const Hyper& hp) {
  const Shape img{hp.height, hp.width};
  auto zf = ex.rss(ex.ifft2c(z));
  auto s = ex.add_scalar(ex.max(zf), kNormFloor);
  auto xn = ex.divide_by(zf, s);
  auto x = ex.reshape(xn, {1, hp.height, hp.width});

  auto e1 = ex.relu(ex.conv(x, ex.param(0), ex.param(1)));
  e1 = ex.relu(ex.conv(e1, ex.param(2), ex.param(3)));
  auto e2 = ex.relu(ex.conv(ex.pool(e1), ex.param(4), ex.param(5)));
  e2 = ex.relu(ex.conv(e2, ex.param(6), ex.param(7)));
  auto d = ex.concat(ex.upsample(e2), e1);
  d = ex.relu(ex.conv(d, ex.param(8), ex.param(9)));
  auto y = ex.reshape(ex.conv(d, ex.param(10), ex.param(11)), img);
  if (hp.residual) y = ex.add(y, xn);
  return ex.scale_by(y, s);
}

// Unrolled cascades: data consistency plus a CNN refinement mapped back to k-space.
template <class Ex>
typename Ex::R varnet_graph(Ex& ex, const typename Ex::C& z, const mri::Acquisition& acq, const Hyper& hp) {
  const RealTensor mask_image = acq.mask.image(hp.height);
  const auto mask = ex.constant(mask_image);
  const auto maps = ex.constant(acq.maps.maps);
  const auto s = ex.add_scalar(ex.max(ex.rss(ex.ifft2c(z))), kNormFloor);

  typename Ex::C zk = z;
  for (std::size_t k = 0; k < hp.cascades; ++k) {
    const std::size_t b = 7 * k;
    auto img = ex.reshape(ex.divide_by(ex.rss(ex.ifft2c(zk)), s), {1, hp.height, hp.width});
    auto h = ex.relu(ex.conv(img, ex.param(b), ex.param(b + 1)));
    h = ex.relu(ex.conv(h, ex.param(b + 2), ex.param(b + 3)));
    auto r = ex.scale_by(ex.reshape(ex.conv(h, ex.param(b + 4), ex.param(b + 5)), {hp.height, hp.width}), s);
    auto refine = ex.fft2c(ex.expand_coils(maps, r));
    auto dc = ex.scale_by(ex.mul_mask(ex.sub(zk, z), mask), ex.param(b + 6));
    zk = ex.add(ex.sub(zk, dc), refine);
  }
  return ex.rss(ex.ifft2c(zk));
}

void require_even(const Hyper& hp) {
  if (hp.height % 2 != 0 || hp.width % 2 != 0) {
    throw ValueError("unet_lite: image size must be even, got " + std::to_string(hp.height) + "x" +
                     std::to_string(hp.width));
  }
}

Shape conv_shape(std::size_t cout, std::size_t cin) { return {cout, cin, kKernel, kKernel}; }

void he_init(std::vector<NamedTensor>& params, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& p : params) {
    if (p.value.rank() != 4) continue;
    const double fan_in = static_cast<double>(p.value.dim(1) * p.value.dim(2) * p.value.dim(3));
    const double sd = std::sqrt(2.0 / fan_in);
    for (auto& e : p.value.storage()) e = sd * rng.normal();
  }
}

void zero_tensor(std::vector<NamedTensor>& params, const std::string& name) {
  for (auto& p : params) {
    if (p.name == name) std::fill(p.value.storage().begin(), p.value.storage().end(), 0.0);
  }
}

std::vector<NamedTensor> allocate(Variant v, const Hyper& hp) {
  std::vector<NamedTensor> out;
  for (auto& [name, shape] : parameter_layout(v, hp)) out.push_back({name, RealTensor(shape)});
  return out;
}

void check_dims(const Hyper& hp) {
  if (hp.height == 0 || hp.width == 0 || hp.coils == 0) throw ValueError("model: empty input shape");
  if (!is_power_of_two(hp.height) || !is_power_of_two(hp.width)) {
    throw ValueError("model: image size must be a power of two");
  }
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::zero_fill: return "zero_fill";
    case Variant::tv: return "tv";
    case Variant::unet_lite: return "unet_lite";
    case Variant::varnet_lite: return "varnet_lite";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  for (Variant v : {Variant::zero_fill, Variant::tv, Variant::unet_lite, Variant::varnet_lite}) {
    if (to_string(v) == name) return v;
  }
  throw ValueError("unknown model variant '" + name + "' (expected zero_fill, tv, unet_lite or varnet_lite)");
}

std::vector<std::pair<std::string, Shape>> parameter_layout(Variant variant, const Hyper& hp) {
  const std::size_t c = hp.channels;
  std::vector<std::pair<std::string, Shape>> out;
  auto conv = [&](const std::string& name, std::size_t cout, std::size_t cin) {
    out.emplace_back(name + ".weight", conv_shape(cout, cin));
    out.emplace_back(name + ".bias", Shape{cout});
  };
  switch (variant) {
    case Variant::unet_lite:
      conv("enc1a", c, 1);
      conv("enc1b", c, c);
      conv("enc2a", 2 * c, c);
      conv("enc2b", 2 * c, 2 * c);
      conv("dec", c, 3 * c);
      conv("out", 1, c);
      break;
    case Variant::varnet_lite:
      for (std::size_t k = 0; k < hp.cascades; ++k) {
        const std::string pre = "cascade" + std::to_string(k);
        conv(pre + ".conv0", c, 1);
        conv(pre + ".conv1", c, c);
        conv(pre + ".conv2", 1, c);
        out.emplace_back(pre + ".eta", Shape{1});
      }
      break;
    default:
      break;
  }
  return out;
}

ReconModel ReconModel::zero_fill(std::size_t h, std::size_t w, std::size_t coils) {
  Hyper hp;
  hp.height = h;
  hp.width = w;
  hp.coils = coils;
  check_dims(hp);
  return ReconModel(Variant::zero_fill, hp);
}

ReconModel ReconModel::tv(std::size_t h, std::size_t w, std::size_t coils, const TvParams& params) {
  if (!(params.lambda > 0.0)) throw ValueError("tv: lambda must be > 0");
  if (params.iters < 1) throw ValueError("tv: iters must be >= 1");
  if (!(params.eps > 0.0)) throw ValueError("tv: eps must be > 0");
  Hyper hp;
  hp.height = h;
  hp.width = w;
  hp.coils = coils;
  hp.tv = params;
  check_dims(hp);
  return ReconModel(Variant::tv, hp);
}

ReconModel ReconModel::unet_lite(std::size_t h, std::size_t w, std::size_t coils, bool residual,
                                 std::uint64_t seed) {
  Hyper hp;
  hp.height = h;
  hp.width = w;
  hp.coils = coils;
  hp.residual = residual;
  check_dims(hp);
  require_even(hp);
  ReconModel m(Variant::unet_lite, hp);
  m.params_ = allocate(m.variant_, hp);
  he_init(m.params_, seed);
  if (residual) zero_tensor(m.params_, "out.weight");
  return m;
}

ReconModel ReconModel::varnet_lite(std::size_t h, std::size_t w, std::size_t coils, std::size_t cascades,
                                   std::uint64_t seed) {
  if (cascades == 0) throw ValueError("varnet_lite: cascades must be >= 1");
  Hyper hp;
  hp.height = h;
  hp.width = w;
  hp.coils = coils;
  hp.cascades = cascades;
  check_dims(hp);
  ReconModel m(Variant::varnet_lite, hp);
  m.params_ = allocate(m.variant_, hp);
  he_init(m.params_, seed);
  for (std::size_t k = 0; k < cascades; ++k) {
    const std::string pre = "cascade" + std::to_string(k);
    zero_tensor(m.params_, pre + ".conv2.weight");
    m.parameter(pre + ".eta")[0] = 1.0;
  }
  return m;
}

ReconModel ReconModel::from_parts(Variant variant, const Hyper& hyper, std::vector<NamedTensor> params) {
  check_dims(hyper);
  if (variant == Variant::unet_lite) require_even(hyper);
  if (variant == Variant::varnet_lite && hyper.cascades == 0) throw ValueError("varnet_lite: cascades must be >= 1");
  const auto layout = parameter_layout(variant, hyper);
  if (layout.size() != params.size()) {
    throw DataError("model parameters: expected " + std::to_string(layout.size()) + " tensors, got " +
                    std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (layout[i].first != params[i].name || layout[i].second != params[i].value.shape()) {
      throw DataError("model parameters: entry " + std::to_string(i) + " is " + params[i].name + " " +
                      mrih::to_string(params[i].value.shape()) + ", expected " + layout[i].first + " " +
                      mrih::to_string(layout[i].second));
    }
  }
  ReconModel m(variant, hyper);
  m.params_ = std::move(params);
  return m;
}

RealTensor& ReconModel::parameter(const std::string& name) {
  for (auto& p : params_) {
    if (p.name == name) return p.value;
  }
  throw ValueError("no parameter named '" + name + "'");
}

std::size_t ReconModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ReconModel::check_input(const Shape& z, const mri::Acquisition& acq) const {
  const Shape expected{hyper_.coils, hyper_.height, hyper_.width};
  if (z != expected) {
    throw ValueError(to_string(variant_) + ": input k-space " + mrih::to_string(z) + " does not match model shape " +
                     mrih::to_string(expected));
  }
  if (acq.mask.width() != hyper_.width) throw ValueError(to_string(variant_) + ": mask width does not match model");
  if (variant_ != Variant::zero_fill && variant_ != Variant::unet_lite && acq.maps.maps.shape() != expected) {
    throw ValueError(to_string(variant_) + ": coil maps " + mrih::to_string(acq.maps.maps.shape()) +
                     " do not match model shape " + mrih::to_string(expected));
  }
}

RealTensor ReconModel::apply(const ComplexTensor& z, const mri::Acquisition& acq) const {
  check_input(z.shape(), acq);
  EagerExec ex{params_};
  switch (variant_) {
    case Variant::zero_fill: return zero_fill_graph(ex, z);
    case Variant::tv: return tv_reconstruct(z, acq, hyper_.tv).image;
    case Variant::unet_lite: return unet_graph(ex, z, hyper_);
    case Variant::varnet_lite: return varnet_graph(ex, z, acq, hyper_);
  }
  throw ValueError("apply: unknown variant");
}

std::vector<ad::Var> ReconModel::bind(ad::Tape& tape, bool trainable) const {
  std::vector<ad::Var> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(trainable ? tape.leaf(p.value) : tape.constant(p.value));
  return out;
}

ad::Var ReconModel::apply(ad::Tape& tape, ad::Var z, const mri::Acquisition& acq,
                          std::span<const ad::Var> params) const {
  if (!tape.is_complex(z)) throw ValueError(to_string(variant_) + ": k-space node must be complex");
  check_input(tape.shape(z), acq);
  if (params.size() != params_.size()) throw ValueError(to_string(variant_) + ": wrong number of bound parameters");
  TapeExec ex{tape, params};
  switch (variant_) {
    case Variant::zero_fill: return zero_fill_graph(ex, z);
    case Variant::tv: throw ValueError("tv reconstruction is not differentiable; attack a learned model instead");
    case Variant::unet_lite: return unet_graph(ex, z, hyper_);
    case Variant::varnet_lite: return varnet_graph(ex, z, acq, hyper_);
  }
  throw ValueError("apply: unknown variant");
}

}  // namespace mrih::recon
