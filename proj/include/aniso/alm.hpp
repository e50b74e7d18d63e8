#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "aniso/common.hpp"
#include "aniso/inner_opt.hpp"
#include "aniso/operators.hpp"
#include "aniso/prox.hpp"

namespace aniso {

enum class GStarKind {
  SimplexIndicator,  ///< g^* = indicator of the unit simplex, g(z) = max_i z_i
  BoxPlusLinear,     ///< g^*(y) = indicator of [-1,1]^m + <b, y>, g(z) = ||z - b||_1
  PointIndicator,    ///< g^*(y) = <b, y>, g = indicator of {b}: equality constraints Ax = b
};

/// min_x f(x) + g(Ax) in the saddle form L(x, y) = f(x) + <y, Ax> - g^*(y).
struct SaddleProblem {
  std::string name;
  Mat a;  ///< m x n
  /// f on its domain; the domain constraint (Unconstrained or Simplex) is carried separately.
  SmoothOracle f;
  std::function<double(const Vec&)> f_conjugate;
  Constraint f_domain = Unconstrained{};
  GStarKind g_star = GStarKind::SimplexIndicator;
  Vec b;  ///< BoxPlusLinear and PointIndicator
  std::uint64_t seed = 0;

  long n() const { return a.cols(); }
  long m() const { return a.rows(); }
};

struct AugLagrangianValue {
  double value = 0.0;
  Vec grad_x;
  Vec eta;
};

/// L_phi(x, y) = sup_eta L(x, eta) - phi(y - eta), its x-gradient and the maximizer eta.
AugLagrangianValue aug_lagrangian(const SaddleProblem& problem, const Vec& x, const Vec& y,
                                  const ProxKernel& dual_kernel);

struct AlmConfig {
  AlmConfig(ProxKernel primal, ProxKernel dual) : primal_kernel(std::move(primal)), dual_kernel(std::move(dual)) {}

  ProxKernel primal_kernel;  ///< vartheta, over R^n
  ProxKernel dual_kernel;    ///< phi, over R^m
  int max_outer = 300;
  /// The k-th subproblem is solved to stationarity max(inner_tol_floor, eps0 * 0.5^k).
  double eps0 = 1e-2;
  double inner_tol_floor = 1e-12;
  int inner_max_iters = 20000;
  /// Stop once the primal-dual gap and the KKT residual are both at most these (0 disables).
  double gap_tol = 0.0;
  double kkt_tol = 0.0;
};

struct AlmRecord {
  int k = 0;
  Vec x;  ///< x^{k+1}
  Vec y;  ///< y^{k+1}
  double primal_value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;
  double kkt_residual = 0.0;
  /// ||y^{k+1} - eta||_inf, zero for kernels with odd gradients
  double dual_update_residual = 0.0;
  // Diagnostics of the joint sequence w = (x, y) as a PPA with kernel vartheta + phi.
  double dual_norm = 0.0;
  double bregman_to_zero = 0.0;
  double bregman_consec = 0.0;
  double sep_old = 0.0;
  int inner_iters = 0;
  double eps = 0.0;
};

struct AlmTrace {
  std::string problem_name;
  std::uint64_t seed = 0;
  std::vector<AlmRecord> records;
  Vec x_final;
  Vec y_final;
  bool reached_tolerance = false;

  std::size_t size() const { return records.size(); }
};

/// x^{k+1} = argmin_x L_phi(x, y^k) + vartheta(x^k - x),
/// y^{k+1} = y^k + grad phi^*(grad_y L_phi(x^{k+1}, y^k)).
AlmTrace run_alm(const SaddleProblem& problem, const AlmConfig& config, const Vec& x0, const Vec& y0);

/// Primal objective f(x) + g(Ax) (infinite off the f-domain, and off Ax = b for equality constraints).
double primal_value(const SaddleProblem& problem, const Vec& x);
/// Dual objective -f^*(-A^T y) - g^*(y).
double dual_value(const SaddleProblem& problem, const Vec& y);

/// primal_value - dual_value, after projecting x and y onto their domains.
/// The equality-constrained form reports the objective gap only; feasibility is in the KKT residual.
double primal_dual_gap(const SaddleProblem& problem, const Vec& x, const Vec& y);

/// Uniform[-5, 5] payoff matrix, simplex strategies on both sides.
SaddleProblem build_zero_sum_game(long n, long m, std::uint64_t seed);
SaddleProblem zero_sum_game_from_matrix(Mat a);
/// f = theta/2 ||x||^2, g = ||. - b||_1, A and b uniform[-5, 5].
SaddleProblem build_l1_regression(long n, long m, double theta, std::uint64_t seed);
SaddleProblem l1_regression_from_data(Mat a, Vec b, double theta);
/// f = theta/2 ||x||^2 subject to Ax = b.
SaddleProblem build_equality_quadratic(Mat a, Vec b, double theta = 1.0);

/// Joint operator (grad f(x) + A^T y, grad g^*(y) - A x) of a smooth problem.
OperatorSpec saddle_operator(const SaddleProblem& problem);

/// Parses "game:n=30,m=32,seed=7" and "l1reg:n=29,m=30,theta=0.1,seed=7".
SaddleProblem parse_problem(const std::string& spec);

/// Primal optimum estimated by a quadratic-kernel run ten times longer and tighter than `reference`.
double reference_optimum(const SaddleProblem& problem, const AlmConfig& reference);

/// CSV with the PPA trace columns plus primal_value,dual_value,gap,kkt_residual.
void write_alm_csv(std::ostream& out, const AlmTrace& trace);

/// Uniform[lo, hi] draws from a seeded mt19937_64 using the top 53 bits, identical on every platform.
class SeededUniform {
 public:
  explicit SeededUniform(std::uint64_t seed);
  double operator()(double lo, double hi);

 private:
  std::mt19937_64 engine_;
};

}  // namespace aniso
