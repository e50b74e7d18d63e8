#include "aniso/alm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "aniso/spec_string.hpp"

namespace aniso {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

void check_problem(const SaddleProblem& p) {
  if (p.a.rows() == 0 || p.a.cols() == 0) throw InvalidArgument("saddle problem with an empty matrix");
  if (!p.f.value || !p.f.gradient || !p.f_conjugate) throw InvalidArgument("saddle problem without an f oracle");
  if (p.g_star != GStarKind::SimplexIndicator && p.b.size() != p.m()) throw DimensionMismatch(p.m(), p.b.size());
}

Constraint g_star_domain(const SaddleProblem& p) {
  switch (p.g_star) {
    case GStarKind::SimplexIndicator:
      return SimplexConstraint{};
    case GStarKind::BoxPlusLinear:
      return BoxConstraint{Vec::Constant(p.m(), -1.0), Vec::Constant(p.m(), 1.0)};
    case GStarKind::PointIndicator:
      return Unconstrained{};
  }
  throw UnsupportedGStar("unknown g* kind");
}

SmoothOracle quadratic_oracle(double theta) {
  SmoothOracle f;
  f.value = [theta](const Vec& x) { return 0.5 * theta * x.squaredNorm(); };
  f.gradient = [theta](const Vec& x) -> Vec { return theta * x; };
  f.hessian = [theta](const Vec& x) -> Mat { return theta * Mat::Identity(x.size(), x.size()); };
  return f;
}

Mat uniform_matrix(SeededUniform& rng, long rows, long cols) {
  // Row-major draws so the matrix does not depend on Eigen's storage order.
  Mat a(rows, cols);
  for (long i = 0; i < rows; ++i) {
    for (long j = 0; j < cols; ++j) a(i, j) = rng(-5.0, 5.0);
  }
  return a;
}

}  // namespace

SeededUniform::SeededUniform(std::uint64_t seed) : engine_(seed) {}

double SeededUniform::operator()(double lo, double hi) {
  const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

AugLagrangianValue aug_lagrangian(const SaddleProblem& problem, const Vec& x, const Vec& y,
                                  const ProxKernel& dual_kernel) {
  check_problem(problem);
  require_dim(x, problem.n());
  require_dim(y, problem.m());
  if (dual_kernel.dimension() != problem.m()) throw DimensionMismatch(problem.m(), dual_kernel.dimension());

  AugLagrangianValue out;
  const Vec ax = problem.a * x;
  double sup = 0.0;
  switch (problem.g_star) {
    case GStarKind::SimplexIndicator:
    case GStarKind::BoxPlusLinear: {
      if (!dual_kernel.separable()) throw InvalidArgument("simplex and box duals need a separable kernel");
      const Vec c = problem.g_star == GStarKind::SimplexIndicator ? ax : Vec(ax - problem.b);
      const auto res = sup_separable_concave(c, y, dual_kernel, g_star_domain(problem));
      out.eta = res.eta;
      sup = res.value;
      break;
    }
    case GStarKind::PointIndicator: {
      const Vec c = ax - problem.b;
      out.eta = y - dual_kernel.grad_phi_star(-c);
      sup = y.dot(c) + dual_kernel.phi_star(-c);
      break;
    }
  }
  out.value = problem.f.value(x) + sup;
  out.grad_x = problem.f.gradient(x) + problem.a.transpose() * out.eta;
  return out;
}

double primal_value(const SaddleProblem& problem, const Vec& x) {
  check_problem(problem);
  require_dim(x, problem.n());
  const Vec ax = problem.a * x;
  const double f = problem.f.value(x);
  switch (problem.g_star) {
    case GStarKind::SimplexIndicator:
      return f + ax.maxCoeff();
    case GStarKind::BoxPlusLinear:
      return f + (ax - problem.b).lpNorm<1>();
    case GStarKind::PointIndicator:
      return f;
  }
  return kInf;
}

double dual_value(const SaddleProblem& problem, const Vec& y) {
  check_problem(problem);
  require_dim(y, problem.m());
  const double fs = problem.f_conjugate(-(problem.a.transpose() * y));
  switch (problem.g_star) {
    case GStarKind::SimplexIndicator:
      return -fs;
    case GStarKind::BoxPlusLinear:
    case GStarKind::PointIndicator:
      return -fs - problem.b.dot(y);
  }
  return -kInf;
}

double primal_dual_gap(const SaddleProblem& problem, const Vec& x, const Vec& y) {
  const Vec xp = project(problem.f_domain, x);
  const Vec yp = project(g_star_domain(problem), y);
  return primal_value(problem, xp) - dual_value(problem, yp);
}

AlmTrace run_alm(const SaddleProblem& problem, const AlmConfig& config, const Vec& x0, const Vec& y0) {
  check_problem(problem);
  require_dim(x0, problem.n());
  require_dim(y0, problem.m());
  require_finite(x0, "run_alm");
  require_finite(y0, "run_alm");
  if (config.primal_kernel.dimension() != problem.n()) {
    throw DimensionMismatch(problem.n(), config.primal_kernel.dimension());
  }
  if (config.dual_kernel.dimension() != problem.m()) throw DimensionMismatch(problem.m(), config.dual_kernel.dimension());
  if (config.max_outer < 1) throw InvalidArgument("max_outer must be positive");
  if (!(config.eps0 >= 0.0) || !(config.inner_tol_floor > 0.0)) throw InvalidArgument("invalid inner tolerances");

  const ProxKernel& theta = config.primal_kernel;
  const ProxKernel& phi = config.dual_kernel;
  const bool stopping = config.gap_tol > 0.0 || config.kkt_tol > 0.0;

  AlmTrace trace;
  trace.problem_name = problem.name;
  trace.seed = problem.seed;
  Vec x = project(problem.f_domain, x0);
  Vec y = y0;
  Vec v_prev;
  for (int k = 0; k < config.max_outer; ++k) {
    const double tol = std::max(config.inner_tol_floor, config.eps0 * std::pow(0.5, k));
    SmoothProblem sub;
    sub.dimension = problem.n();
    sub.constraint = problem.f_domain;
    sub.objective = [&](const Vec& z, Vec* grad) {
      const auto al = aug_lagrangian(problem, z, y, phi);
      const Vec d = x - z;
      if (grad) *grad = al.grad_x - theta.grad_phi(d);
      return al.value + theta.phi(d);
    };
    InnerSolveReport rep;
    try {
      rep = minimize(sub, x, tol, config.inner_max_iters);
    } catch (const Error& e) {
      throw NonConvergence("ALM subproblem at iteration " + std::to_string(k) + ": " + e.what(), kNaN);
    }
    if (!std::isfinite(rep.stationarity)) {
      throw NonConvergence("ALM subproblem at iteration " + std::to_string(k) + " produced a non-finite point", rep.stationarity);
    }
    const Vec xn = rep.x;
    const auto al = aug_lagrangian(problem, xn, y, phi);
    const Vec step = phi.grad_phi_star(-phi.grad_phi(y - al.eta));
    const Vec yn = y + step;

    AlmRecord rec;
    rec.k = k;
    rec.x = xn;
    rec.y = yn;
    rec.primal_value = primal_value(problem, project(problem.f_domain, xn));
    rec.dual_value = dual_value(problem, project(g_star_domain(problem), yn));
    rec.gap = rec.primal_value - rec.dual_value;
    rec.kkt_residual = std::max(inf_norm(xn - x), inf_norm(yn - y));
    if (problem.g_star == GStarKind::PointIndicator) {
      rec.kkt_residual = std::max(rec.kkt_residual, inf_norm(problem.a * xn - problem.b));
    }
    rec.dual_update_residual = inf_norm(yn - al.eta);

    const Vec vx = theta.grad_phi(x - xn);
    const Vec vy = phi.grad_phi(y - yn);
    Vec v(vx.size() + vy.size());
    v << vx, vy;
    rec.dual_norm = std::hypot(theta.dual_norm(vx), phi.dual_norm(vy));
    rec.bregman_to_zero = bregman_div_star(theta, vx, Vec::Zero(vx.size())) + bregman_div_star(phi, vy, Vec::Zero(vy.size()));
    rec.bregman_consec = v_prev.size() == 0 ? kNaN
                                            : bregman_div_star(theta, v_prev.head(vx.size()), vx) +
                                                  bregman_div_star(phi, v_prev.tail(vy.size()), vy);
    rec.sep_old = (x - xn).dot(vx) + (y - yn).dot(vy);
    rec.inner_iters = rep.iters;
    rec.eps = rep.stationarity;
    trace.records.push_back(rec);

    v_prev = std::move(v);
    x = xn;
    y = yn;
    if (stopping && (config.gap_tol <= 0.0 || rec.gap <= config.gap_tol) &&
        (config.kkt_tol <= 0.0 || rec.kkt_residual <= config.kkt_tol)) {
      trace.reached_tolerance = true;
      break;
    }
  }
  trace.x_final = x;
  trace.y_final = y;
  return trace;
}

SaddleProblem zero_sum_game_from_matrix(Mat a) {
  if (a.rows() < 1 || a.cols() < 1) throw InvalidArgument("game matrix must be nonempty");
  SaddleProblem p;
  p.name = fmt::format("game:n={},m={}", a.cols(), a.rows());
  p.a = std::move(a);
  p.f.value = [](const Vec&) { return 0.0; };
  p.f.gradient = [](const Vec& x) -> Vec { return Vec::Zero(x.size()); };
  p.f.hessian = [](const Vec& x) -> Mat { return Mat::Zero(x.size(), x.size()); };
  p.f_conjugate = [](const Vec& w) { return w.maxCoeff(); };
  p.f_domain = SimplexConstraint{};
  p.g_star = GStarKind::SimplexIndicator;
  return p;
}

SaddleProblem build_zero_sum_game(long n, long m, std::uint64_t seed) {
  if (n < 2 || m < 2) throw InvalidArgument("game dimensions must be at least 2");
  SeededUniform rng(seed);
  auto p = zero_sum_game_from_matrix(uniform_matrix(rng, m, n));
  p.name = fmt::format("game:n={},m={},seed={}", n, m, seed);
  p.seed = seed;
  return p;
}

SaddleProblem l1_regression_from_data(Mat a, Vec b, double theta) {
  if (!(theta > 0.0)) throw InvalidArgument("theta must be positive");
  if (b.size() != a.rows()) throw DimensionMismatch(a.rows(), b.size());
  SaddleProblem p;
  p.name = fmt::format("l1reg:n={},m={},theta={}", a.cols(), a.rows(), theta);
  p.a = std::move(a);
  p.b = std::move(b);
  p.f = quadratic_oracle(theta);
  p.f_conjugate = [theta](const Vec& w) { return w.squaredNorm() / (2.0 * theta); };
  p.g_star = GStarKind::BoxPlusLinear;
  return p;
}

SaddleProblem build_l1_regression(long n, long m, double theta, std::uint64_t seed) {
  if (n < 1 || m < 1) throw InvalidArgument("regression dimensions must be positive");
  SeededUniform rng(seed);
  Mat a = uniform_matrix(rng, m, n);
  Vec b(m);
  for (long i = 0; i < m; ++i) b[i] = rng(-5.0, 5.0);
  auto p = l1_regression_from_data(std::move(a), std::move(b), theta);
  p.name = fmt::format("l1reg:n={},m={},theta={},seed={}", n, m, theta, seed);
  p.seed = seed;
  return p;
}

SaddleProblem build_equality_quadratic(Mat a, Vec b, double theta) {
  if (!(theta > 0.0)) throw InvalidArgument("theta must be positive");
  if (b.size() != a.rows()) throw DimensionMismatch(a.rows(), b.size());
  SaddleProblem p;
  p.name = fmt::format("equality:n={},m={}", a.cols(), a.rows());
  p.a = std::move(a);
  p.b = std::move(b);
  p.f = quadratic_oracle(theta);
  p.f_conjugate = [theta](const Vec& w) { return w.squaredNorm() / (2.0 * theta); };
  p.g_star = GStarKind::PointIndicator;
  return p;
}

OperatorSpec saddle_operator(const SaddleProblem& problem) {
  check_problem(problem);
  if (problem.g_star != GStarKind::PointIndicator) throw UnsupportedGStar("saddle operator needs a smooth g*");
  if (!std::holds_alternative<Unconstrained>(problem.f_domain)) throw InvalidArgument("saddle operator needs smooth f");
  SmoothOracle g;
  const Vec b = problem.b;
  g.value = [b](const Vec& y) { return b.dot(y); };
  g.gradient = [b](const Vec&) -> Vec { return b; };
  g.hessian = [b](const Vec&) -> Mat { return Mat::Zero(b.size(), b.size()); };
  return OperatorSpec::saddle(problem.f, std::move(g), problem.a);
}

SaddleProblem parse_problem(const std::string& spec) {
  const SpecString s = parse_spec_string(spec);
  if (s.name == "game") {
    s.only("n,m,seed");
    return build_zero_sum_game(s.integer_or("n", 30), s.integer_or("m", 32),
                               static_cast<std::uint64_t>(s.integer_or("seed", 7)));
  }
  if (s.name == "l1reg") {
    s.only("n,m,theta,seed");
    return build_l1_regression(s.integer_or("n", 29), s.integer_or("m", 30), s.number_or("theta", 0.1),
                               static_cast<std::uint64_t>(s.integer_or("seed", 7)));
  }
  throw ParseError("unknown problem '" + s.name + "'");
}

double reference_optimum(const SaddleProblem& problem, const AlmConfig& reference) {
  AlmConfig cfg(ProxKernel::separable_power(problem.n(), 2.0), ProxKernel::separable_power(problem.m(), 2.0));
  cfg.max_outer = 10 * reference.max_outer;
  cfg.eps0 = reference.eps0;
  cfg.inner_tol_floor = reference.inner_tol_floor / 10.0;
  cfg.inner_max_iters = 10 * reference.inner_max_iters;
  cfg.gap_tol = reference.gap_tol / 10.0;
  cfg.kkt_tol = reference.kkt_tol / 10.0;
  const auto trace = run_alm(problem, cfg, Vec::Zero(problem.n()), Vec::Zero(problem.m()));
  double best = kInf;
  for (const auto& r : trace.records) best = std::min(best, r.primal_value);
  return best;
}

void write_alm_csv(std::ostream& out, const AlmTrace& trace) {
  out << "k,dual_norm_q,bregman_to_zero,bregman_consec,dist_p,dist_2,sep_old,sep_sol,inner_iters,eps_k,"
         "primal_value,dual_value,gap,kkt_residual\n";
  for (const auto& r : trace.records) {
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n",
                       r.k, r.dual_norm, r.bregman_to_zero, r.bregman_consec, kNaN, kNaN, r.sep_old, kNaN,
                       r.inner_iters, r.eps, r.primal_value, r.dual_value, r.gap, r.kkt_residual);
  }
}

}  // namespace aniso
