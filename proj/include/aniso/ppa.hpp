#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "aniso/common.hpp"
#include "aniso/operators.hpp"
#include "aniso/prox.hpp"
#include "aniso/resolvents.hpp"

namespace aniso {

struct StopRule {
  /// Stop once ||v^k||_q falls to this level.
  double dual_norm_tol = 1e-10;
  /// Stop once ||x^{k+1} - x^k||_inf falls to this level (0 disables).
  double step_tol = 0.0;
};

struct PpaConfig {
  explicit PpaConfig(ProxKernel k) : kernel(std::move(k)) {}

  ProxKernel kernel;
  /// Relaxation parameter in (0, 1].
  double lambda = 1.0;
  /// Initial inner tolerance; the k-th solve uses max(solver.residual_tol, eps0 * 0.5^k).
  /// Zero keeps every solve at solver.residual_tol.
  double eps0 = 0.0;
  int max_outer = 200;
  StopRule stop;
  SolverTolerances solver;
};

enum class StopReason { DualNorm, Step, MaxOuter };

const char* to_string(StopReason reason);

struct IterateRecord {
  int k = 0;
  Vec x;
  Vec z;
  Vec v;
  double dual_norm = 0.0;
  /// D_{psi^*}(v^k, 0) for the effective kernel psi = lambda * phi.
  double bregman_to_zero = 0.0;
  /// D_{psi^*}(v^{k-1}, v^k); NaN at k = 0.
  double bregman_consec = 0.0;
  double dist_p = 0.0;
  double dist_2 = 0.0;
  double sep_old = 0.0;
  double sep_sol = 0.0;
  int inner_iters = 0;
  double residual = 0.0;
  double eps = 0.0;
};

/// Outer iterations of a PPA run. records[k] holds (x^k, z^k, v^k).
struct IterateTrace {
  std::string operator_name;
  std::string kernel_name;
  double lambda = 1.0;
  /// The kernel whose Bregman distances drive the dual Fejér analysis: lambda * phi.
  std::optional<ProxKernel> effective_kernel;
  std::optional<Vec> x_star;
  std::vector<IterateRecord> records;
  Vec x_final;
  StopReason stop = StopReason::MaxOuter;

  std::size_t size() const { return records.size(); }
};

/// A resolvent solve failed during a run; `partial` holds the iterations completed before it.
class ResolventFailure : public Error {
 public:
  ResolventFailure(int iteration, const std::string& what, IterateTrace partial)
      : Error("resolvent failure at iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration),
        partial_(std::move(partial)) {}
  int iteration() const { return iteration_; }
  const IterateTrace& partial() const { return partial_; }

 private:
  int iteration_;
  IterateTrace partial_;
};

/// x^{k+1} = x^k + lambda (z^k - x^k) with z^k the anisotropic resolvent at x^k.
IterateTrace run_ppa(const OperatorSpec& op, const PpaConfig& config, const Vec& x0);

/// Per-k slack of the dual quasi-Fejér inequality
///   D(v^{k+1}, 0) <= D(v^k, 0) - D(v^k, v^{k+1}) + (sqrt(eps_k) + sqrt(eps_{k+1}))^2,
/// returned as RHS - LHS.
std::vector<double> fejer_report(const IterateTrace& trace);

struct HalfspaceSeparation {
  double sep_old = 0.0;  ///< <x^k - z^k, v^k>, positive unless v^k = 0
  double sep_sol = 0.0;  ///< <x* - z^k, v^k>, nonpositive up to the inner error
};

std::vector<HalfspaceSeparation> halfspace_report(const IterateTrace& trace, const Vec& x_star);

/// Sum over k of <x^{k+2} - x^{k+1}, v^{k+1} - v^k>, reported as partial sums.
std::vector<double> inner_product_partial_sums(const IterateTrace& trace);

struct OrderEstimate {
  double order = 0.0;
  double rate = 0.0;
  int pairs_used = 0;
};

/// Least-squares fit of log e_{k+1} = order log e_k + log rate over the last
/// `tail` consecutive pairs with both errors above `floor`.
OrderEstimate estimate_order(const std::vector<double>& errors, int tail, double floor = 1e-13);

/// Largest ratio e_{k+1} / e_k over the last `window` pairs above `floor`.
double tail_q_factor(const std::vector<double>& errors, int window, double floor = 1e-13);

struct UniformMonotoneReport {
  std::string kernel_name;
  double lambda = 1.0;
  bool converged = false;
  int iterations = 0;
  double final_norm = 0.0;
  /// Largest partial sum of <x^{k+2} - x^{k+1}, v^{k+1} - v^k> and its bound D(v^0, 0) + errors.
  double max_partial_sum = 0.0;
  double sum_bound = 0.0;
  bool passed = false;
};

/// Runs the PPA on T = identity in R^3 from (3, -2, 1) and checks
/// ||x^k|| <= target within max_iters plus the partial-sum bound.
UniformMonotoneReport uniform_monotone_suite(const ProxKernel& kernel, double lambda = 1.0, int max_iters = 500,
                                             double target = 1e-8);

/// Writes the trace as CSV with header
/// k,dual_norm_q,bregman_to_zero,bregman_consec,dist_p,dist_2,sep_old,sep_sol,inner_iters,eps_k.
void write_trace_csv(std::ostream& out, const IterateTrace& trace);

/// Column values of a trace, for building derived outputs.
std::vector<double> dist_p_column(const IterateTrace& trace);
std::vector<double> dist_2_column(const IterateTrace& trace);

}  // namespace aniso
