#include "aniso/resolvents.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "aniso/inner_opt.hpp"

namespace aniso {

namespace {

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

Vec solve_linear(const Mat& a, const Vec& rhs) {
  Eigen::FullPivLU<Mat> lu(a);
  if (lu.isInvertible()) return lu.solve(rhs);
  return a.completeOrthogonalDecomposition().solve(rhs);
}

struct NewtonSystem {
  std::function<Vec(const Vec&)> residual;
  std::function<std::optional<Mat>(const Vec&)> jacobian;
};

struct NewtonOutcome {
  Vec u;
  double residual = 0.0;
  int iters = 0;
  bool converged = false;
};

// Damped Newton on F(u) = 0 with Armijo backtracking on 0.5 ||F||^2. When
// the Jacobian is missing or the line search fails, falls back to
// u - t F(u) with t halved until the residual decreases.
NewtonOutcome damped_newton(const NewtonSystem& sys, Vec u, const SolverTolerances& tol) {
  constexpr double kArmijo = 1e-4;
  NewtonOutcome out;
  Vec f = sys.residual(u);
  double r = inf_norm(f);
  int it = 0;
  for (; it < tol.max_iters && r > tol.residual_tol; ++it) {
    bool stepped = false;
    if (auto j = sys.jacobian(u)) {
      const Vec d = solve_linear(*j, -f);
      if (d.allFinite()) {
        const double m0 = 0.5 * f.squaredNorm();
        for (double t = 1.0; t >= tol.damping_min; t *= 0.5) {
          Vec un = u + t * d;
          Vec fn = sys.residual(un);
          if (fn.allFinite() && 0.5 * fn.squaredNorm() <= (1.0 - 2.0 * kArmijo * t) * m0) {
            u = std::move(un);
            f = std::move(fn);
            stepped = true;
            break;
          }
        }
      }
    }
    if (!stepped) {
      for (double t = 1.0; t >= tol.damping_min; t *= 0.5) {
        Vec un = u - t * f;
        Vec fn = sys.residual(un);
        if (fn.allFinite() && inf_norm(fn) < r) {
          u = std::move(un);
          f = std::move(fn);
          stepped = true;
          break;
        }
      }
    }
    r = inf_norm(f);
    if (!stepped) break;
  }
  // One extra full step once inside the tolerance pushes nested solves
  // down to rounding level; kept only if it helps.
  if (r <= tol.residual_tol && r > 0.0) {
    if (auto j = sys.jacobian(u)) {
      Vec un = u + solve_linear(*j, -f);
      Vec fn = sys.residual(un);
      if (fn.allFinite() && inf_norm(fn) < r) {
        u = std::move(un);
        r = inf_norm(fn);
      }
    }
  }
  out.u = std::move(u);
  out.residual = r;
  out.iters = it;
  out.converged = r <= tol.residual_tol;
  return out;
}

ResolventResult scalar_path(const OperatorSpec& op, const ProxKernel& kernel, const Vec& x,
                            const Vec& z0) {
  const auto& maps = op.scalar_maps();
  ResolventResult res;
  res.z.resize(x.size());
  for (long i = 0; i < x.size(); ++i) {
    const ScalarMap& t = maps[i];
    auto g = [&](double z) { return z + kernel.coord_grad_phi_star(t.value(z)); };
    std::function<double(double)> dg;
    if (t.derivative) {
      dg = [&](double z) {
        const auto h = kernel.coord_hess_phi_star(t.value(z));
        return h ? 1.0 + *h * t.derivative(z) : std::numeric_limits<double>::quiet_NaN();
      };
    }
    const ScalarRoot root = solve_increasing(g, dg, x[i], z0[i]);
    res.z[i] = root.t;
    res.inner_iters = std::max(res.inner_iters, root.iters);
  }
  res.v = kernel.grad_phi(x - res.z);
  res.residual_norm = resolvent_residual(op, kernel, x, res);
  return res;
}

ResolventResult minimize_path(const OperatorSpec& op, const ProxKernel& kernel, const Vec& x,
                              const Vec& z0, const SolverTolerances& tol) {
  const SmoothOracle& f = op.smooth_function();
  SmoothProblem prob;
  prob.dimension = op.dimension();
  prob.constraint = op.constraint();
  prob.objective = [&](const Vec& z, Vec* grad) {
    const Vec s = x - z;
    if (grad) *grad = f.gradient(z) - kernel.grad_phi(s);
    return f.value(z) + kernel.phi(s);
  };
  MinimizeOptions opts;
  opts.tol = tol.residual_tol;
  opts.max_iters = std::max(2000, tol.max_iters);
  const InnerSolveReport rep = minimize(prob, project(prob.constraint, z0), opts);
  ResolventResult res;
  res.z = rep.x;
  res.v = kernel.grad_phi(x - rep.x);
  res.residual_norm = rep.stationarity;
  res.inner_iters = rep.iters;
  res.converged = rep.converged;
  return res;
}

ResolventResult newton_path(const OperatorSpec& op, const ProxKernel& kernel, const Vec& x,
                            const Vec& z0, const SolverTolerances& tol) {
  const long n = x.size();
  ResolventResult res;
  if (kernel.prefers_primal_hessian()) {
    // Unknown s = x - z:  grad phi(s) - T(x - s) = 0.
    NewtonSystem sys;
    sys.residual = [&](const Vec& s) -> Vec { return kernel.grad_phi(s) - op.eval(x - s); };
    sys.jacobian = [&](const Vec& s) -> std::optional<Mat> {
      const auto h = kernel.hess_phi(s);
      const auto jt = op.jacobian(x - s);
      if (!h || !jt) return std::nullopt;
      return Mat(*h + *jt);
    };
    const NewtonOutcome o = damped_newton(sys, x - z0, tol);
    res.z = x - o.u;
    res.v = kernel.grad_phi(x - res.z);
    res.residual_norm = o.residual;
    res.inner_iters = o.iters;
    res.converged = o.converged;
  } else {
    // Unknown z:  z + grad phi^*(T z) - x = 0.
    NewtonSystem sys;
    sys.residual = [&](const Vec& z) -> Vec { return z + kernel.grad_phi_star(op.eval(z)) - x; };
    sys.jacobian = [&](const Vec& z) -> std::optional<Mat> {
      const auto jt = op.jacobian(z);
      if (!jt) return std::nullopt;
      const auto h = kernel.hess_phi_star(op.eval(z));
      if (!h) return std::nullopt;
      return Mat(Mat::Identity(n, n) + *h * *jt);
    };
    const NewtonOutcome o = damped_newton(sys, z0, tol);
    res.z = o.u;
    res.v = kernel.grad_phi(x - o.u);
    res.residual_norm = o.residual;
    res.inner_iters = o.iters;
    res.converged = o.converged;
  }
  return res;
}

}  // namespace

ResolventResult anisotropic_resolvent(const OperatorSpec& op, const ProxKernel& kernel, const Vec& x,
                                      const SolverTolerances& tol, const Vec* warm_start) {
  if (!(tol.residual_tol > 0.0)) throw InvalidArgument("residual_tol must be positive");
  require_dim(x, op.dimension());
  if (kernel.dimension() != op.dimension()) throw DimensionMismatch(op.dimension(), kernel.dimension());
  require_finite(x, "anisotropic_resolvent");
  Vec z0 = x;
  if (warm_start) {
    require_dim(*warm_start, x.size());
    if (warm_start->allFinite()) z0 = *warm_start;
  }

  ResolventPath path = tol.path;
  if (path == ResolventPath::Auto) {
    if (op.kind() == OperatorKind::Diagonal && kernel.separable()) {
      path = ResolventPath::Scalar;
    } else if (op.kind() == OperatorKind::Subdifferential) {
      path = ResolventPath::Minimize;
    } else {
      path = ResolventPath::Newton;
    }
  }

  ResolventResult res;
  switch (path) {
    case ResolventPath::Scalar:
      if (op.kind() != OperatorKind::Diagonal || !kernel.separable()) {
        throw InvalidArgument("scalar resolvent path needs a diagonal operator and a separable kernel");
      }
      res = scalar_path(op, kernel, x, z0);
      res.converged = res.residual_norm <= tol.residual_tol;
      break;
    case ResolventPath::Minimize:
      if (op.kind() != OperatorKind::Subdifferential) {
        throw InvalidArgument("minimization resolvent path needs a subdifferential operator");
      }
      res = minimize_path(op, kernel, x, z0, tol);
      break;
    default:
      res = newton_path(op, kernel, x, z0, tol);
      break;
  }
  if (!res.z.allFinite() || !res.v.allFinite()) {
    throw NonConvergence("anisotropic resolvent produced non-finite output", res.residual_norm);
  }
  if (!res.converged && !tol.allow_inexact) {
    throw NonConvergence("anisotropic resolvent of " + op.name(), res.residual_norm);
  }
  return res;
}

double resolvent_residual(const OperatorSpec& op, const ProxKernel& kernel, const Vec& x,
                          const ResolventResult& result) {
  const Vec tz = op.eval(result.z);
  if (kernel.prefers_primal_hessian()) return inf_norm(kernel.grad_phi(x - result.z) - tz);
  return inf_norm(result.z + kernel.grad_phi_star(tz) - x);
}

Vec bregman_resolvent(const OperatorSpec& s_op, const ProxKernel& kernel, const Vec& w,
                      const SolverTolerances& tol) {
  require_dim(w, s_op.dimension());
  if (kernel.dimension() != s_op.dimension()) throw DimensionMismatch(s_op.dimension(), kernel.dimension());
  require_finite(w, "bregman_resolvent");
  const long n = w.size();

  if (s_op.kind() == OperatorKind::Inverse && s_op.inner().is_affine()) {
    const OperatorSpec& t = s_op.inner();
    if (t.matrix().isZero(0.0)) {
      // The inverse of the constant map -b has domain {-b}.
      return -t.offset();
    }
    if (!Eigen::FullPivLU<Mat>(t.matrix()).isInvertible()) {
      throw SetValuedAt("Bregman resolvent of the inverse of a singular affine operator");
    }
  }

  const Vec target = kernel.grad_phi_star(w);
  NewtonOutcome o;
  if (kernel.prefers_primal_hessian()) {
    // Unknown t = grad phi^*(u):  t + S(grad phi(t)) - grad phi^*(w) = 0.
    NewtonSystem sys;
    sys.residual = [&](const Vec& t) -> Vec { return t + s_op.eval(kernel.grad_phi(t)) - target; };
    sys.jacobian = [&](const Vec& t) -> std::optional<Mat> {
      const auto h = kernel.hess_phi(t);
      const auto js = s_op.jacobian(kernel.grad_phi(t));
      if (!h || !js) return std::nullopt;
      return Mat(Mat::Identity(n, n) + *js * *h);
    };
    o = damped_newton(sys, target, tol);
    o.u = kernel.grad_phi(o.u);
  } else {
    // Unknown u:  grad phi^*(u) + S(u) - grad phi^*(w) = 0.
    NewtonSystem sys;
    sys.residual = [&](const Vec& u) -> Vec { return kernel.grad_phi_star(u) + s_op.eval(u) - target; };
    sys.jacobian = [&](const Vec& u) -> std::optional<Mat> {
      const auto h = kernel.hess_phi_star(u);
      const auto js = s_op.jacobian(u);
      if (!h || !js) return std::nullopt;
      return Mat(*h + *js);
    };
    o = damped_newton(sys, w, tol);
  }
  if (!o.u.allFinite() || (!o.converged && !tol.allow_inexact)) {
    throw NonConvergence("Bregman resolvent of " + s_op.name(), o.residual);
  }
  return o.u;
}

double moreau_residual(const OperatorSpec& op, const ProxKernel& kernel, const Vec& x,
                       const SolverTolerances& tol, CheckMutation mutation) {
  const Vec z = anisotropic_resolvent(op, kernel, x, tol).z;
  const Vec u = bregman_resolvent(OperatorSpec::inverse(op), kernel, kernel.grad_phi(x), tol);
  const Vec back = kernel.grad_phi_star(u);
  const Vec rhs = mutation.flip_grad_phi_star_sign ? Vec(x + back) : Vec(x - back);
  return inf_norm(z - rhs);
}

double relaxation_absorption_residual(const OperatorSpec& op, const ProxKernel& kernel, const Vec& x,
                                      double tau, double rho, const SolverTolerances& tol) {
  if (!(tau > 0.0)) throw InvalidArgument("tau must be positive");
  if (!(rho >= 0.0)) throw InvalidArgument("rho must be nonnegative");
  const double gamma = tau + rho;
  const double lambda = tau / gamma;
  const OperatorSpec wrapped = OperatorSpec::yosida(op, rho, kernel);
  const Vec lhs = anisotropic_resolvent(wrapped, kernel.epi_scaled(tau), x, tol).z;
  const Vec inner = anisotropic_resolvent(op, kernel.epi_scaled(gamma), x, tol).z;
  const Vec rhs = (1.0 - lambda) * x + lambda * inner;
  return inf_norm(lhs - rhs);
}

double dfirm_violation(const OperatorSpec& s_op, const ProxKernel& kernel,
                       const std::vector<std::pair<Vec, Vec>>& pairs, const SolverTolerances& tol) {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& [x, y] : pairs) {
    const Vec ax = bregman_resolvent(s_op, kernel, x, tol);
    const Vec ay = bregman_resolvent(s_op, kernel, y, tol);
    const Vec diff = ax - ay;
    const double lhs = (kernel.grad_phi_star(ax) - kernel.grad_phi_star(ay)).dot(diff);
    const double rhs = (kernel.grad_phi_star(x) - kernel.grad_phi_star(y)).dot(diff);
    worst = std::min(worst, rhs - lhs);
  }
  return worst;
}

}  // namespace aniso
