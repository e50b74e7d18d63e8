#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "aniso/common.hpp"

namespace aniso {

enum class KernelKind { SeparablePower, IsotropicPower, Cosh, ExpPenalty };

/// Legendre prox-function phi together with its convex conjugate.
///
/// Every kind is normalized so that phi(0) = 0 and grad phi(0) = 0, and all
/// gradients are odd maps. The stored `scale` applies the epi-scaling
/// (s * phi)(x) = s phi(x / s), whose conjugate is s phi^*.
///
/// Kinds:
///   SeparablePower p:  phi(x) = sum |x_i|^p / p
///   IsotropicPower p:  phi(x) = ||x||_2^p / p
///   Cosh:              phi(x) = sum (cosh(x_i) - 1)
///   ExpPenalty rho:    phi(x) = sum rho (exp|x_i| - |x_i| - 1)
///
/// Kernels are immutable values.
class ProxKernel {
 public:
  static ProxKernel separable_power(long dim, double p, double scale = 1.0);
  static ProxKernel isotropic_power(long dim, double p, double scale = 1.0);
  static ProxKernel cosh(long dim, double scale = 1.0);
  static ProxKernel exp_penalty(long dim, double rho, double scale = 1.0);

  KernelKind kind() const { return kind_; }
  long dimension() const { return dim_; }
  double scale() const { return scale_; }
  /// Power p for the power kernels, 2 for the others.
  double exponent() const { return p_; }
  /// Conjugate exponent q with 1/p + 1/q = 1.
  double conjugate_exponent() const { return q_; }
  double rho() const { return rho_; }
  bool separable() const { return kind_ != KernelKind::IsotropicPower; }

  /// Returns lambda * this, i.e. x -> lambda phi(x / lambda) with respect to the current kernel.
  ProxKernel epi_scaled(double lambda) const;
  ProxKernel resized(long dim) const;

  double phi(const Vec& x) const;
  double phi_star(const Vec& v) const;
  Vec grad_phi(const Vec& x) const;
  Vec grad_phi_star(const Vec& v) const;

  // Second derivatives, or nullopt at points where they do not exist
  // (power kernels at zero coordinates when the exponent is below 2).
  std::optional<Mat> hess_phi(const Vec& x) const;
  std::optional<Mat> hess_phi_star(const Vec& v) const;

  /// True when the Hessian of phi is finite everywhere, so Newton-type
  /// solvers should work with phi rather than phi^*.
  bool prefers_primal_hessian() const;

  /// ||x||_p for power kernels, ||x||_2 otherwise.
  double primal_norm(const Vec& x) const;
  /// ||v||_q for power kernels, ||v||_2 otherwise.
  double dual_norm(const Vec& v) const;

  // Per-coordinate pieces of a separable kernel (epi-scaling applied).
  double coord_phi(double t) const;
  double coord_phi_star(double s) const;
  double coord_grad_phi(double t) const;
  double coord_grad_phi_star(double s) const;
  std::optional<double> coord_hess_phi(double t) const;
  std::optional<double> coord_hess_phi_star(double s) const;

  /// Spec string accepted by parse_kernel (without the dimension).
  std::string describe() const;

 private:
  ProxKernel(KernelKind kind, long dim, double p, double rho, double scale);
  void check(const Vec& x) const;

  KernelKind kind_;
  long dim_;
  double p_;
  double q_;
  double rho_;
  double scale_;
};

/// Value of a Bregman distance; nonnegative up to rounding, which is clamped.
struct BregmanDistanceValue {
  double value = 0.0;
  operator double() const { return value; }
};

/// D_phi(x, y) = phi(x) - phi(y) - <grad phi(y), x - y>.
BregmanDistanceValue bregman_div(const ProxKernel& kernel, const Vec& x, const Vec& y);
/// D_{phi^*}(u, v) = phi^*(u) - phi^*(v) - <grad phi^*(v), u - v>.
BregmanDistanceValue bregman_div_star(const ProxKernel& kernel, const Vec& u, const Vec& v);

/// D*(w,v) - D*(u,v) - D*(w,u) - <grad phi^*(u) - grad phi^*(v), w - u>; zero in exact arithmetic.
double three_point_residual(const ProxKernel& kernel, const Vec& u, const Vec& v, const Vec& w);

/// Parses "sep_power:p=4", "iso_power:p=3", "cosh", "exp:rho=0.01", each with an
/// optional ":scale=s" suffix.
ProxKernel parse_kernel(std::string_view spec, long dim);

}  // namespace aniso
