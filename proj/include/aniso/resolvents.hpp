#pragma once

#include <utility>
#include <vector>

#include "aniso/common.hpp"
#include "aniso/operators.hpp"
#include "aniso/prox.hpp"

namespace aniso {

enum class ResolventPath {
  Auto,      ///< Pick from the operator structure.
  Scalar,    ///< Per-coordinate monotone root finding (Diagonal operator, separable kernel).
  Newton,    ///< Damped semismooth Newton on the resolvent equation.
  Minimize,  ///< Inner minimization of f(z) + phi(x - z) (Subdifferential operators).
};

struct SolverTolerances {
  double residual_tol = 1e-12;
  int max_iters = 200;
  double damping_min = 1e-8;
  ResolventPath path = ResolventPath::Auto;
  /// Return an unconverged result instead of throwing NonConvergence.
  bool allow_inexact = false;
};

/// Output of an anisotropic resolvent solve: z = (id + grad phi^* o T)^{-1}(x)
/// and the dual vector v = grad phi(x - z), which lies in T(z) up to the
/// reported residual.
struct ResolventResult {
  Vec z;
  Vec v;
  double residual_norm = 0.0;
  int inner_iters = 0;
  bool converged = false;
};

/// Solves z + grad phi^*(T z) = x.
///
/// Power kernels with p >= 2 have an unbounded conjugate Hessian at zero, so
/// the equation is then solved for the step s = x - z in the form
/// grad phi(s) = T(x - s) and the residual is measured in the dual space.
/// Otherwise it is solved for z directly. `warm_start` is an initial guess for z.
ResolventResult anisotropic_resolvent(const OperatorSpec& op, const ProxKernel& kernel, const Vec& x,
                                      const SolverTolerances& tol = {}, const Vec* warm_start = nullptr);

/// Post-hoc check of a resolvent output, independent of the solver path:
/// ||grad phi(x - z) - T(z)||_inf for kernels solved in the step form,
/// ||z + grad phi^*(T z) - x||_inf otherwise. Requires single-valued T.
double resolvent_residual(const OperatorSpec& op, const ProxKernel& kernel, const Vec& x,
                          const ResolventResult& result);

/// Bregman (D-)resolvent: u with grad phi^*(u) + S(u) = grad phi^*(w).
Vec bregman_resolvent(const OperatorSpec& s_op, const ProxKernel& kernel, const Vec& w,
                      const SolverTolerances& tol = {});

/// Hooks that deliberately break an identity check, used to confirm the
/// checks can fail.
struct CheckMutation {
  bool flip_grad_phi_star_sign = false;
};

/// ||J_T(x) - (x - grad phi^*(B(grad phi(x))))||_inf with B the Bregman resolvent of T^{-1}.
double moreau_residual(const OperatorSpec& op, const ProxKernel& kernel, const Vec& x,
                       const SolverTolerances& tol = {}, CheckMutation mutation = {});

/// Gap between (id + tau grad phi^* o T_rho)^{-1}(x) and
/// (1 - lambda) x + lambda (id + gamma grad phi^* o T)^{-1}(x), gamma = tau + rho,
/// lambda = tau / gamma. The left side goes through the Yosida-wrapped operator.
double relaxation_absorption_residual(const OperatorSpec& op, const ProxKernel& kernel, const Vec& x,
                                      double tau, double rho, const SolverTolerances& tol = {});

/// min over pairs of RHS - LHS of the grad phi^*-firm nonexpansiveness
/// inequality for A = Bregman resolvent of S.
double dfirm_violation(const OperatorSpec& s_op, const ProxKernel& kernel,
                       const std::vector<std::pair<Vec, Vec>>& pairs, const SolverTolerances& tol = {});

}  // namespace aniso
