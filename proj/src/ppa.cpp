#include "aniso/ppa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

namespace aniso {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

}  // namespace

const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::DualNorm:
      return "dual_norm";
    case StopReason::Step:
      return "step";
    case StopReason::MaxOuter:
      return "max_outer";
  }
  return "unknown";
}

IterateTrace run_ppa(const OperatorSpec& op, const PpaConfig& config, const Vec& x0) {
  if (!(config.lambda > 0.0 && config.lambda <= 1.0)) throw InvalidArgument("lambda must lie in (0, 1]");
  if (config.max_outer < 1) throw InvalidArgument("max_outer must be positive");
  if (!(config.eps0 >= 0.0)) throw InvalidArgument("eps0 must be nonnegative");
  require_dim(x0, op.dimension());
  require_finite(x0, "run_ppa");
  const ProxKernel& kernel = config.kernel;
  if (kernel.dimension() != op.dimension()) throw DimensionMismatch(op.dimension(), kernel.dimension());

  IterateTrace trace;
  trace.operator_name = op.name();
  trace.kernel_name = kernel.describe();
  trace.lambda = config.lambda;
  trace.effective_kernel = kernel.epi_scaled(config.lambda);
  trace.x_star = op.known_zero();
  const ProxKernel& eff = *trace.effective_kernel;

  Vec x = x0;
  Vec warm = x0;
  const Vec zero = Vec::Zero(x0.size());
  trace.stop = StopReason::MaxOuter;
  for (int k = 0; k < config.max_outer; ++k) {
    SolverTolerances tol = config.solver;
    if (config.eps0 > 0.0) tol.residual_tol = std::max(config.solver.residual_tol, config.eps0 * std::pow(0.5, k));

    ResolventResult res;
    try {
      res = anisotropic_resolvent(op, kernel, x, tol, &warm);
    } catch (const Error& e) {
      trace.x_final = x;
      throw ResolventFailure(k, e.what(), std::move(trace));
    }
    warm = res.z;

    IterateRecord rec;
    rec.k = k;
    rec.x = x;
    rec.z = res.z;
    rec.v = res.v;
    rec.dual_norm = kernel.dual_norm(res.v);
    rec.bregman_to_zero = bregman_div_star(eff, res.v, zero);
    rec.bregman_consec = trace.records.empty() ? kNaN : double(bregman_div_star(eff, trace.records.back().v, res.v));
    rec.sep_old = (x - res.z).dot(res.v);
    if (trace.x_star) {
      rec.dist_p = kernel.primal_norm(x - *trace.x_star);
      rec.dist_2 = (x - *trace.x_star).norm();
      rec.sep_sol = (*trace.x_star - res.z).dot(res.v);
    } else {
      rec.dist_p = rec.dist_2 = rec.sep_sol = kNaN;
    }
    rec.inner_iters = res.inner_iters;
    rec.residual = res.residual_norm;
    rec.eps = res.residual_norm * (1.0 + res.z.norm());
    trace.records.push_back(std::move(rec));

    if (trace.records.back().dual_norm <= config.stop.dual_norm_tol) {
      trace.stop = StopReason::DualNorm;
      break;
    }
    Vec next = x + config.lambda * (res.z - x);
    const double step = inf_norm(next - x);
    x = std::move(next);
    if (config.stop.step_tol > 0.0 && step <= config.stop.step_tol) {
      trace.stop = StopReason::Step;
      break;
    }
  }
  trace.x_final = x;
  return trace;
}

std::vector<double> fejer_report(const IterateTrace& trace) {
  std::vector<double> out;
  if (trace.records.size() < 2) return out;
  const ProxKernel& eff = *trace.effective_kernel;
  const Vec zero = Vec::Zero(trace.records.front().v.size());
  for (std::size_t k = 0; k + 1 < trace.records.size(); ++k) {
    const auto& a = trace.records[k];
    const auto& b = trace.records[k + 1];
    const double err = std::pow(std::sqrt(a.eps) + std::sqrt(b.eps), 2);
    const double rhs = bregman_div_star(eff, a.v, zero) - bregman_div_star(eff, a.v, b.v) + err;
    out.push_back(rhs - bregman_div_star(eff, b.v, zero));
  }
  return out;
}

std::vector<HalfspaceSeparation> halfspace_report(const IterateTrace& trace, const Vec& x_star) {
  std::vector<HalfspaceSeparation> out;
  out.reserve(trace.records.size());
  for (const auto& r : trace.records) {
    require_dim(x_star, r.x.size());
    out.push_back({(r.x - r.z).dot(r.v), (x_star - r.z).dot(r.v)});
  }
  return out;
}

std::vector<double> inner_product_partial_sums(const IterateTrace& trace) {
  // x^{k+1} is records[k+1].x, or x_final after the last record.
  const auto& rs = trace.records;
  auto x_at = [&](std::size_t i) -> const Vec& { return i < rs.size() ? rs[i].x : trace.x_final; };
  std::vector<double> out;
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < rs.size(); ++k) {
    sum += (x_at(k + 2) - x_at(k + 1)).dot(rs[k + 1].v - rs[k].v);
    out.push_back(sum);
  }
  return out;
}

OrderEstimate estimate_order(const std::vector<double>& errors, int tail, double floor) {
  for (double e : errors) {
    if (!(e >= 0.0) || !std::isfinite(e)) throw InvalidArgument("errors must be finite and nonnegative");
  }
  std::vector<std::pair<double, double>> pairs;
  for (std::size_t k = 0; k + 1 < errors.size(); ++k) {
    if (errors[k] > floor && errors[k + 1] > floor) pairs.emplace_back(std::log(errors[k]), std::log(errors[k + 1]));
  }
  if (tail > 0 && pairs.size() > static_cast<std::size_t>(tail)) pairs.erase(pairs.begin(), pairs.end() - tail);
  if (pairs.size() < 3) throw InsufficientData("need at least 3 error pairs above the floor");
  double mx = 0, my = 0;
  for (const auto& [a, b] : pairs) mx += a, my += b;
  mx /= pairs.size();
  my /= pairs.size();
  double sxx = 0, sxy = 0;
  for (const auto& [a, b] : pairs) {
    sxx += (a - mx) * (a - mx);
    sxy += (a - mx) * (b - my);
  }
  if (sxx == 0.0) throw InsufficientData("errors are constant on the tail");
  OrderEstimate out;
  out.order = sxy / sxx;
  out.rate = std::exp(my - out.order * mx);
  out.pairs_used = static_cast<int>(pairs.size());
  return out;
}

double tail_q_factor(const std::vector<double>& errors, int window, double floor) {
  std::vector<double> ratios;
  for (std::size_t k = 0; k + 1 < errors.size(); ++k) {
    if (errors[k] > floor && errors[k + 1] > floor) ratios.push_back(errors[k + 1] / errors[k]);
  }
  if (ratios.empty()) throw InsufficientData("no error pairs above the floor");
  if (window > 0 && ratios.size() > static_cast<std::size_t>(window)) ratios.erase(ratios.begin(), ratios.end() - window);
  return *std::max_element(ratios.begin(), ratios.end());
}

UniformMonotoneReport uniform_monotone_suite(const ProxKernel& kernel, double lambda, int max_iters,
                                             double target) {
  Vec x0(3);
  x0 << 3.0, -2.0, 1.0;
  PpaConfig cfg(kernel.resized(3));
  cfg.lambda = lambda;
  cfg.max_outer = max_iters;
  cfg.stop.dual_norm_tol = 0.0;
  UniformMonotoneReport rep;
  rep.kernel_name = kernel.describe();
  rep.lambda = lambda;

  const IterateTrace trace = run_ppa(OperatorSpec::identity(3), cfg, x0);
  int hit = -1;
  for (const auto& r : trace.records) {
    if (r.x.norm() <= target) {
      hit = r.k;
      break;
    }
  }
  if (hit < 0 && trace.x_final.norm() <= target) hit = static_cast<int>(trace.records.size());
  rep.converged = hit >= 0;
  rep.iterations = rep.converged ? hit : max_iters;
  rep.final_norm = trace.x_final.norm();

  const auto sums = inner_product_partial_sums(trace);
  double errs = 0.0;
  for (const auto& r : trace.records) errs += r.eps;
  rep.max_partial_sum = sums.empty() ? 0.0 : *std::max_element(sums.begin(), sums.end());
  rep.sum_bound = trace.records.front().bregman_to_zero + 4.0 * errs + 1e-12;
  const double min_sum = sums.empty() ? 0.0 : *std::min_element(sums.begin(), sums.end());
  rep.passed = rep.converged && rep.max_partial_sum <= rep.sum_bound && min_sum >= -1e-12;
  return rep;
}

void write_trace_csv(std::ostream& out, const IterateTrace& trace) {
  out << "k,dual_norm_q,bregman_to_zero,bregman_consec,dist_p,dist_2,sep_old,sep_sol,inner_iters,eps_k\n";
  for (const auto& r : trace.records) {
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{},{:.17g}\n", r.k, r.dual_norm,
                       r.bregman_to_zero, r.bregman_consec, r.dist_p, r.dist_2, r.sep_old, r.sep_sol, r.inner_iters,
                       r.eps);
  }
}

std::vector<double> dist_p_column(const IterateTrace& trace) {
  std::vector<double> out;
  for (const auto& r : trace.records) out.push_back(r.dist_p);
  return out;
}

std::vector<double> dist_2_column(const IterateTrace& trace) {
  std::vector<double> out;
  for (const auto& r : trace.records) out.push_back(r.dist_2);
  return out;
}

}  // namespace aniso
