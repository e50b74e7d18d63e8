#include "aniso/prox.hpp"

#include <cmath>
#include <sstream>

#include "aniso/spec_string.hpp"

namespace aniso {

namespace {

// sign(t) |t|^a, exact for a == 1.
double signed_pow(double t, double a) {
  if (a == 1.0) return t;
  if (t == 0.0) return 0.0;
  return std::copysign(std::pow(std::abs(t), a), t);
}

// cosh(t) - 1 without cancellation near zero.
double cosh_m1(double t) {
  const double s = std::sinh(0.5 * t);
  return 2.0 * s * s;
}

// exp|t| - |t| - 1 without cancellation near zero.
double exp_penalty_unit(double t) {
  const double a = std::abs(t);
  if (a < 0.1) {
    double term = a * a / 2.0;
    double sum = term;
    for (int k = 3; k <= 12; ++k) {
      term *= a / k;
      sum += term;
    }
    return sum;
  }
  return std::expm1(a) - a;
}

// (1 + w) log(1 + w) - w for w >= 0.
double exp_penalty_conj_unit(double w) {
  if (w < 0.1) {
    double sum = 0.0;
    double wk = w;
    for (int k = 2; k <= 16; ++k) {
      wk *= w;
      const double term = wk / (static_cast<double>(k) * (k - 1));
      sum += (k % 2 == 0) ? term : -term;
    }
    return sum;
  }
  return (1.0 + w) * std::log1p(w) - w;
}

}  // namespace

ProxKernel::ProxKernel(KernelKind kind, long dim, double p, double rho, double scale)
    : kind_(kind), dim_(dim), p_(p), q_(p / (p - 1.0)), rho_(rho), scale_(scale) {
  if (dim <= 0) throw InvalidArgument("kernel dimension must be positive");
  if (!(p > 1.0) || !std::isfinite(p)) throw InvalidArgument("kernel exponent must satisfy p > 1");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidArgument("epi-scale must be positive");
  if (kind == KernelKind::ExpPenalty && !(rho > 0.0)) throw InvalidArgument("exp kernel needs rho > 0");
}

ProxKernel ProxKernel::separable_power(long dim, double p, double scale) {
  return ProxKernel(KernelKind::SeparablePower, dim, p, 0.0, scale);
}

ProxKernel ProxKernel::isotropic_power(long dim, double p, double scale) {
  return ProxKernel(KernelKind::IsotropicPower, dim, p, 0.0, scale);
}

ProxKernel ProxKernel::cosh(long dim, double scale) {
  return ProxKernel(KernelKind::Cosh, dim, 2.0, 0.0, scale);
}

ProxKernel ProxKernel::exp_penalty(long dim, double rho, double scale) {
  return ProxKernel(KernelKind::ExpPenalty, dim, 2.0, rho, scale);
}

ProxKernel ProxKernel::epi_scaled(double lambda) const {
  if (!(lambda > 0.0)) throw InvalidArgument("epi-scaling factor must be positive");
  ProxKernel out = *this;
  out.scale_ = scale_ * lambda;
  return out;
}

ProxKernel ProxKernel::resized(long dim) const {
  return ProxKernel(kind_, dim, p_, rho_, scale_);
}

void ProxKernel::check(const Vec& x) const {
  require_dim(x, dim_);
  require_finite(x, "prox kernel");
}

double ProxKernel::coord_phi(double t) const {
  const double u = t / scale_;
  switch (kind_) {
    case KernelKind::SeparablePower:
    case KernelKind::IsotropicPower:
      return scale_ * std::pow(std::abs(u), p_) / p_;
    case KernelKind::Cosh:
      return scale_ * cosh_m1(u);
    case KernelKind::ExpPenalty:
      return scale_ * rho_ * exp_penalty_unit(u);
  }
  return 0.0;
}

double ProxKernel::coord_phi_star(double s) const {
  switch (kind_) {
    case KernelKind::SeparablePower:
    case KernelKind::IsotropicPower:
      return scale_ * std::pow(std::abs(s), q_) / q_;
    case KernelKind::Cosh: {
      const double r = std::sqrt(1.0 + s * s);
      return scale_ * (s * std::asinh(s) - s * s / (r + 1.0));
    }
    case KernelKind::ExpPenalty:
      return scale_ * rho_ * exp_penalty_conj_unit(std::abs(s) / rho_);
  }
  return 0.0;
}

double ProxKernel::coord_grad_phi(double t) const {
  const double u = t / scale_;
  switch (kind_) {
    case KernelKind::SeparablePower:
    case KernelKind::IsotropicPower:
      return signed_pow(u, p_ - 1.0);
    case KernelKind::Cosh:
      return std::sinh(u);
    case KernelKind::ExpPenalty:
      return std::copysign(rho_ * std::expm1(std::abs(u)), u);
  }
  return 0.0;
}

double ProxKernel::coord_grad_phi_star(double s) const {
  switch (kind_) {
    case KernelKind::SeparablePower:
    case KernelKind::IsotropicPower:
      return scale_ * signed_pow(s, 1.0 / (p_ - 1.0));
    case KernelKind::Cosh:
      return scale_ * std::asinh(s);
    case KernelKind::ExpPenalty:
      return scale_ * std::copysign(std::log1p(std::abs(s) / rho_), s);
  }
  return 0.0;
}

std::optional<double> ProxKernel::coord_hess_phi(double t) const {
  const double u = t / scale_;
  switch (kind_) {
    case KernelKind::SeparablePower:
    case KernelKind::IsotropicPower:
      if (p_ == 2.0) return 1.0 / scale_;
      if (u == 0.0) {
        if (p_ < 2.0) return std::nullopt;
        return 0.0;
      }
      return (p_ - 1.0) * std::pow(std::abs(u), p_ - 2.0) / scale_;
    case KernelKind::Cosh:
      return std::cosh(u) / scale_;
    case KernelKind::ExpPenalty:
      return rho_ * std::exp(std::abs(u)) / scale_;
  }
  return std::nullopt;
}

std::optional<double> ProxKernel::coord_hess_phi_star(double s) const {
  switch (kind_) {
    case KernelKind::SeparablePower:
    case KernelKind::IsotropicPower:
      if (q_ == 2.0 || p_ == 2.0) return scale_;
      if (s == 0.0) {
        if (q_ < 2.0) return std::nullopt;
        return 0.0;
      }
      return scale_ * (q_ - 1.0) * std::pow(std::abs(s), q_ - 2.0);
    case KernelKind::Cosh:
      return scale_ / std::sqrt(1.0 + s * s);
    case KernelKind::ExpPenalty:
      return scale_ / (rho_ + std::abs(s));
  }
  return std::nullopt;
}

double ProxKernel::phi(const Vec& x) const {
  check(x);
  if (kind_ == KernelKind::IsotropicPower) {
    return scale_ * std::pow(x.norm() / scale_, p_) / p_;
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) sum += coord_phi(x[i]);
  return sum;
}

double ProxKernel::phi_star(const Vec& v) const {
  check(v);
  if (kind_ == KernelKind::IsotropicPower) {
    return scale_ * std::pow(v.norm(), q_) / q_;
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) sum += coord_phi_star(v[i]);
  return sum;
}

Vec ProxKernel::grad_phi(const Vec& x) const {
  check(x);
  if (kind_ == KernelKind::IsotropicPower) {
    const double r = x.norm();
    if (r == 0.0) return Vec::Zero(dim_);
    return std::pow(r / scale_, p_ - 2.0) * (x / scale_);
  }
  Vec g(dim_);
  for (Eigen::Index i = 0; i < x.size(); ++i) g[i] = coord_grad_phi(x[i]);
  return g;
}

Vec ProxKernel::grad_phi_star(const Vec& v) const {
  check(v);
  if (kind_ == KernelKind::IsotropicPower) {
    const double r = v.norm();
    if (r == 0.0) return Vec::Zero(dim_);
    return scale_ * std::pow(r, q_ - 2.0) * v;
  }
  Vec g(dim_);
  for (Eigen::Index i = 0; i < v.size(); ++i) g[i] = coord_grad_phi_star(v[i]);
  return g;
}

namespace {

// Hessian of ||x||^a / a, i.e. ||x||^{a-2} (I + (a-2) xhat xhat^T).
std::optional<Mat> isotropic_hessian(const Vec& x, double a) {
  const long n = x.size();
  const double r = x.norm();
  if (a == 2.0) return Mat::Identity(n, n);
  if (r == 0.0) {
    if (a < 2.0) return std::nullopt;
    return Mat::Zero(n, n);
  }
  const Vec xhat = x / r;
  Mat h = Mat::Identity(n, n) + (a - 2.0) * xhat * xhat.transpose();
  return h * std::pow(r, a - 2.0);
}

}  // namespace

std::optional<Mat> ProxKernel::hess_phi(const Vec& x) const {
  check(x);
  if (kind_ == KernelKind::IsotropicPower) {
    auto h = isotropic_hessian(x / scale_, p_);
    if (!h) return std::nullopt;
    return Mat(*h / scale_);
  }
  Mat h = Mat::Zero(dim_, dim_);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const auto d = coord_hess_phi(x[i]);
    if (!d) return std::nullopt;
    h(i, i) = *d;
  }
  return h;
}

std::optional<Mat> ProxKernel::hess_phi_star(const Vec& v) const {
  check(v);
  if (kind_ == KernelKind::IsotropicPower) {
    auto h = isotropic_hessian(v, q_);
    if (!h) return std::nullopt;
    return Mat(*h * scale_);
  }
  Mat h = Mat::Zero(dim_, dim_);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const auto d = coord_hess_phi_star(v[i]);
    if (!d) return std::nullopt;
    h(i, i) = *d;
  }
  return h;
}

bool ProxKernel::prefers_primal_hessian() const {
  switch (kind_) {
    case KernelKind::SeparablePower:
    case KernelKind::IsotropicPower:
      return p_ >= 2.0;
    case KernelKind::Cosh:
    case KernelKind::ExpPenalty:
      return false;
  }
  return false;
}

double ProxKernel::primal_norm(const Vec& x) const {
  if (kind_ == KernelKind::SeparablePower) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) sum += std::pow(std::abs(x[i]), p_);
    return std::pow(sum, 1.0 / p_);
  }
  return x.norm();
}

double ProxKernel::dual_norm(const Vec& v) const {
  if (kind_ == KernelKind::SeparablePower) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) sum += std::pow(std::abs(v[i]), q_);
    return std::pow(sum, 1.0 / q_);
  }
  return v.norm();
}

std::string ProxKernel::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case KernelKind::SeparablePower:
      os << "sep_power:p=" << p_;
      break;
    case KernelKind::IsotropicPower:
      os << "iso_power:p=" << p_;
      break;
    case KernelKind::Cosh:
      os << "cosh";
      break;
    case KernelKind::ExpPenalty:
      os << "exp:rho=" << rho_;
      break;
  }
  if (scale_ != 1.0) os << ":scale=" << scale_;
  return os.str();
}

BregmanDistanceValue bregman_div(const ProxKernel& kernel, const Vec& x, const Vec& y) {
  const double d = kernel.phi(x) - kernel.phi(y) - kernel.grad_phi(y).dot(x - y);
  return {std::max(d, 0.0)};
}

BregmanDistanceValue bregman_div_star(const ProxKernel& kernel, const Vec& u, const Vec& v) {
  const double d = kernel.phi_star(u) - kernel.phi_star(v) - kernel.grad_phi_star(v).dot(u - v);
  return {std::max(d, 0.0)};
}

double three_point_residual(const ProxKernel& kernel, const Vec& u, const Vec& v, const Vec& w) {
  // Raw (unclamped) distances so that the identity is tested exactly.
  auto raw = [&](const Vec& a, const Vec& b) {
    return kernel.phi_star(a) - kernel.phi_star(b) - kernel.grad_phi_star(b).dot(a - b);
  };
  return raw(w, v) - raw(u, v) - raw(w, u) -
         (kernel.grad_phi_star(u) - kernel.grad_phi_star(v)).dot(w - u);
}

ProxKernel parse_kernel(std::string_view spec, long dim) {
  const SpecString s = parse_spec_string(spec);
  const double scale = s.number_or("scale", 1.0);
  if (s.name == "sep_power") {
    s.only("p,scale");
    return ProxKernel::separable_power(dim, s.number("p"), scale);
  }
  if (s.name == "iso_power") {
    s.only("p,scale");
    return ProxKernel::isotropic_power(dim, s.number("p"), scale);
  }
  if (s.name == "cosh") {
    s.only("scale");
    return ProxKernel::cosh(dim, scale);
  }
  if (s.name == "exp") {
    s.only("rho,scale");
    return ProxKernel::exp_penalty(dim, s.number("rho"), scale);
  }
  throw ParseError("unknown kernel '" + s.name + "'");
}

}  // namespace aniso
