#pragma once

#include <functional>
#include <variant>

#include "aniso/common.hpp"
#include "aniso/prox.hpp"

namespace aniso {

struct Unconstrained {};
struct BoxConstraint {
  Vec lo;
  Vec hi;
};
/// The unit simplex {x >= 0, sum x = 1}.
struct SimplexConstraint {};

using Constraint = std::variant<Unconstrained, BoxConstraint, SimplexConstraint>;

/// Value-and-gradient oracle: returns f(x) and writes grad f(x) when `grad` is non-null.
using ObjectiveFn = std::function<double(const Vec& x, Vec* grad)>;

struct SmoothProblem {
  ObjectiveFn objective;
  long dimension = 0;
  Constraint constraint = Unconstrained{};
};

struct InnerSolveReport {
  Vec x;
  double value = 0.0;
  /// ||grad f||_inf, or ||x - P(x - grad f)||_inf on constrained problems.
  double stationarity = 0.0;
  int iters = 0;
  int f_evals = 0;
  bool converged = false;
};

struct MinimizeOptions {
  double tol = 1e-10;
  int max_iters = 2000;
  int lbfgs_memory = 10;
  double armijo_c = 1e-4;
  int nonmonotone_window = 5;
};

/// Minimizes a smooth (possibly only Hölder-smooth) objective.
///
/// Unconstrained problems use L-BFGS with backtracking Armijo line search and
/// restart on curvature failure. Box and simplex constraints use projected
/// gradient with Barzilai-Borwein steps and a nonmonotone line search.
/// Hitting the iteration cap returns the best point with converged = false.
InnerSolveReport minimize(const SmoothProblem& problem, const Vec& x0, const MinimizeOptions& options);
InnerSolveReport minimize(const SmoothProblem& problem, const Vec& x0, double tol, int max_iters);

/// Euclidean projection onto the unit simplex (sort and threshold).
Vec project_simplex(const Vec& y);
Vec project_box(const Vec& y, const Vec& lo, const Vec& hi);
Vec project_box(const Vec& y, double lo, double hi);
Vec project(const Constraint& constraint, const Vec& y);

struct ConcaveSupResult {
  Vec eta;
  double value = 0.0;
  /// Simplex multiplier (0 for the box).
  double multiplier = 0.0;
  int iters = 0;
};

/// argmax over the box or simplex of <c, eta> - phi(y - eta) for a separable kernel.
///
/// Box: coordinate-wise stationarity then clamp. Simplex: safeguarded
/// Newton-bisection on the multiplier of the sum constraint.
ConcaveSupResult sup_separable_concave(const Vec& c, const Vec& y, const ProxKernel& kernel,
                                       const Constraint& constraint, double tol = 1e-14);

/// Root of an increasing scalar function g(t) = target.
///
/// Expands a bracket from `guess`, then alternates Newton steps (when `dg`
/// is provided and the step stays inside the bracket) with bisection.
struct ScalarRoot {
  double t = 0.0;
  int iters = 0;
};
ScalarRoot solve_increasing(const std::function<double(double)>& g,
                            const std::function<double(double)>& dg, double target, double guess,
                            double tol = 1e-15, int max_iters = 400);

}  // namespace aniso
