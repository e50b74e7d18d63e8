#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "aniso/common.hpp"
#include "aniso/inner_opt.hpp"
#include "aniso/prox.hpp"

namespace aniso {

enum class OperatorKind { Affine, Subdifferential, Saddle, Diagonal, Inverse, Yosida };

/// Scalar nondecreasing map with optional derivative, one per coordinate of a Diagonal operator.
struct ScalarMap {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
};

/// Smooth convex function oracle (value, gradient, Hessian). The Hessian may be empty.
struct SmoothOracle {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  std::function<Mat(const Vec&)> hessian;
};

/// A maximal monotone operator T : R^n => R^n.
///
/// Operators are immutable values; copies share their (immutable) structure.
/// Set-valuedness is represented operationally: `eval` is available where T
/// is single-valued, and resolvent solves handle the rest.
class OperatorSpec {
 public:
  /// T(x) = M x - b. The symmetric part of M must be positive semidefinite.
  static OperatorSpec affine(Mat m, Vec b);
  static OperatorSpec zero(long n);
  static OperatorSpec identity(long n);
  /// [[0, 1], [-1, 0]].
  static OperatorSpec skew2();
  /// T = f + indicator(constraint) subdifferential for smooth convex f.
  static OperatorSpec subdifferential(SmoothOracle f, long n, Constraint constraint = Unconstrained{});
  /// T(x, y) = (grad f(x) + A^T y, grad g^*(y) - A x) on R^{n+m}.
  static OperatorSpec saddle(SmoothOracle f, SmoothOracle g_star, Mat a);
  static OperatorSpec diagonal(std::vector<ScalarMap> maps);
  static OperatorSpec inverse(OperatorSpec inner);
  /// Bregman-Yosida regularization (rho grad phi^* + T^{-1})^{-1}.
  static OperatorSpec yosida(OperatorSpec inner, double rho, ProxKernel kernel);

  OperatorKind kind() const;
  long dimension() const;
  const std::string& name() const;
  OperatorSpec with_name(std::string name) const;

  /// Known zero x* of T, when attached.
  const std::optional<Vec>& known_zero() const;
  OperatorSpec with_known_zero(Vec x_star) const;

  /// T(x) where T is single-valued. Throws SetValuedAt otherwise.
  Vec eval(const Vec& x) const;
  /// A generalized Jacobian of T at x, when available.
  std::optional<Mat> jacobian(const Vec& x) const;

  bool is_affine() const { return kind() == OperatorKind::Affine; }
  const Mat& matrix() const;  // Affine only
  const Vec& offset() const;  // Affine only

  // Structural accessors for Inverse, Yosida, Diagonal, Subdifferential, Saddle.
  const OperatorSpec& inner() const;
  double yosida_rho() const;
  const ProxKernel& yosida_kernel() const;
  const std::vector<ScalarMap>& scalar_maps() const;
  const SmoothOracle& smooth_function() const;
  const Constraint& constraint() const;

  struct Node;

 private:
  explicit OperatorSpec(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// Parameters (M, b) of the linear instance with zero x* = (2, -2) and
/// growth ||x - x*||_2 = 2 ||T(x)||_2.
OperatorSpec growth_instance_linear();

/// Parses "skew2", "growth_linear", "zero:n=2", "identity:n=3",
/// "affine:file=M.csv,b.csv" and "yosida(inner;rho=0.5;kernel=sep_power:p=3)".
/// Relative file paths are resolved against `base_dir`.
OperatorSpec parse_operator(const std::string& spec, const std::string& base_dir = "");

struct EnlargementQuery {
  double epsilon = 0.0;
  Vec x;
  Vec u;
};

struct EnlargementResult {
  bool member = false;
  /// inf_y <y - x, T(y) - u>; -infinity when unbounded below.
  double certificate = 0.0;
};

/// Exact membership test u in T^e(eps, x) for an affine operator.
EnlargementResult check_enlargement_member(const OperatorSpec& op, const EnlargementQuery& query);

/// min over pairs of <grad phi^*(T x) - grad phi^*(T y), x - y>. Negative values
/// certify that grad phi^* o T is not monotone.
double probe_nonmonotonicity(const OperatorSpec& op, const ProxKernel& kernel,
                             const std::vector<std::pair<Vec, Vec>>& pairs);

/// min over pairs of <T x - T y, x - y>.
double probe_monotonicity(const OperatorSpec& op, const std::vector<std::pair<Vec, Vec>>& pairs);

/// For each radius r, the smallest ||T x||_2 over the supplied unit directions
/// scaled to ||x||_2 = r. Coercive operators give a profile growing without bound.
std::vector<double> coercivity_profile(const OperatorSpec& op, const std::vector<double>& radii,
                                       const std::vector<Vec>& directions);

}  // namespace aniso
