#include "aniso/inner_opt.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <vector>

namespace aniso {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

// Rounding noise floor for comparing objective values near f.
double value_noise(double f) { return 64.0 * kEps * std::max(1.0, std::abs(f)); }

struct Counter {
  const ObjectiveFn& fn;
  int evals = 0;
  double operator()(const Vec& x, Vec* g) {
    ++evals;
    const double f = fn(x, g);
    if (!std::isfinite(f) || (g && !g->allFinite())) throw NonFiniteInput("objective oracle");
    return f;
  }
};

Vec two_loop(const Vec& g, const std::deque<Vec>& s_hist, const std::deque<Vec>& y_hist) {
  const std::size_t m = s_hist.size();
  std::vector<double> alpha(m), rho(m);
  Vec q = g;
  for (std::size_t j = m; j-- > 0;) {
    rho[j] = 1.0 / y_hist[j].dot(s_hist[j]);
    alpha[j] = rho[j] * s_hist[j].dot(q);
    q -= alpha[j] * y_hist[j];
  }
  const double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
  Vec r = gamma * q;
  for (std::size_t j = 0; j < m; ++j) {
    const double beta = rho[j] * y_hist[j].dot(r);
    r += s_hist[j] * (alpha[j] - beta);
  }
  return -r;
}

InnerSolveReport minimize_lbfgs(const SmoothProblem& problem, const Vec& x0,
                                const MinimizeOptions& opt) {
  Counter fg{problem.objective};
  InnerSolveReport rep;
  Vec x = x0;
  Vec g(x.size());
  double f = fg(x, &g);
  double gnorm = inf_norm(g);

  std::deque<Vec> s_hist, y_hist;
  Vec x_new(x.size()), g_new(x.size());
  bool first = true;
  int it = 0;
  for (; it < opt.max_iters && gnorm > opt.tol; ++it) {
    Vec d = s_hist.empty() ? Vec(-g) : two_loop(g, s_hist, y_hist);
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      d = -g;
      slope = g.dot(d);
    }
    double t = (first || s_hist.empty()) ? std::min(1.0, 1.0 / std::max(gnorm, 1e-300)) : 1.0;
    first = false;

    bool accepted = false;
    double f_new = f;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + t * d;
      f_new = fg(x_new, &g_new);
      if (f_new <= f + opt.armijo_c * t * slope) {
        accepted = true;
        break;
      }
      // Near the rounding floor the value can no longer certify decrease;
      // accept steps that reduce the gradient without increasing f visibly.
      if (f_new <= f + value_noise(f) && inf_norm(g_new) < gnorm) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      if (!s_hist.empty()) {
        s_hist.clear();
        y_hist.clear();
        continue;
      }
      break;
    }
    const Vec s = x_new - x;
    const Vec y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-14 * s.norm() * y.norm() && sy > 0.0) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      if (static_cast<int>(s_hist.size()) > opt.lbfgs_memory) {
        s_hist.pop_front();
        y_hist.pop_front();
      }
    } else {
      s_hist.clear();
      y_hist.clear();
    }
    x.swap(x_new);
    g.swap(g_new);
    f = f_new;
    gnorm = inf_norm(g);
  }
  rep.x = x;
  rep.value = f;
  rep.stationarity = gnorm;
  rep.iters = it;
  rep.f_evals = fg.evals;
  rep.converged = gnorm <= opt.tol;
  return rep;
}

InnerSolveReport minimize_projected(const SmoothProblem& problem, const Vec& x0,
                                    const MinimizeOptions& opt) {
  Counter fg{problem.objective};
  const Constraint& c = problem.constraint;
  InnerSolveReport rep;
  Vec x = project(c, x0);
  Vec g(x.size());
  double f = fg(x, &g);
  auto pg_norm = [&](const Vec& at, const Vec& grad) { return inf_norm(project(c, at - grad) - at); };
  double pg = pg_norm(x, g);

  constexpr double alpha_min = 1e-12;
  constexpr double alpha_max = 1e12;
  double alpha = std::clamp(1.0 / std::max(pg, 1e-300), alpha_min, alpha_max);
  std::deque<double> recent{f};

  Vec best_x = x;
  double best_f = f, best_pg = pg;
  Vec x_new(x.size()), g_new(x.size());
  int it = 0;
  for (; it < opt.max_iters && pg > opt.tol; ++it) {
    const Vec d = project(c, x - alpha * g) - x;
    const double slope = g.dot(d);
    const double f_ref = *std::max_element(recent.begin(), recent.end());
    double lambda = 1.0;
    bool accepted = false;
    double f_new = f;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + lambda * d;
      f_new = fg(x_new, &g_new);
      if (f_new <= f_ref + opt.armijo_c * lambda * slope) {
        accepted = true;
        break;
      }
      if (f_new <= f + value_noise(f) && pg_norm(x_new, g_new) < pg) {
        accepted = true;
        break;
      }
      // Safeguarded quadratic interpolation of the step.
      const double denom = 2.0 * (f_new - f - lambda * slope);
      double next = denom > 0.0 ? -slope * lambda * lambda / denom : 0.5 * lambda;
      lambda = std::clamp(next, 0.1 * lambda, 0.9 * lambda);
    }
    if (!accepted) {
      if (alpha > alpha_min * 2.0) {
        alpha = std::max(alpha_min, alpha * 1e-3);
        continue;
      }
      break;
    }
    const Vec s = x_new - x;
    const Vec y = g_new - g;
    const double sy = s.dot(y);
    alpha = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, alpha_min, alpha_max) : alpha_max;
    x.swap(x_new);
    g.swap(g_new);
    f = f_new;
    pg = pg_norm(x, g);
    recent.push_back(f);
    if (static_cast<int>(recent.size()) > opt.nonmonotone_window) recent.pop_front();
    if (pg < best_pg || (pg == best_pg && f < best_f)) {
      best_x = x;
      best_f = f;
      best_pg = pg;
    }
  }
  rep.x = best_x;
  rep.value = best_f;
  rep.stationarity = best_pg;
  rep.iters = it;
  rep.f_evals = fg.evals;
  rep.converged = best_pg <= opt.tol;
  return rep;
}

}  // namespace

InnerSolveReport minimize(const SmoothProblem& problem, const Vec& x0, const MinimizeOptions& options) {
  require_dim(x0, problem.dimension);
  require_finite(x0, "minimize");
  if (!problem.objective) throw InvalidArgument("minimize: missing objective");
  if (std::holds_alternative<Unconstrained>(problem.constraint)) {
    return minimize_lbfgs(problem, x0, options);
  }
  return minimize_projected(problem, x0, options);
}

InnerSolveReport minimize(const SmoothProblem& problem, const Vec& x0, double tol, int max_iters) {
  MinimizeOptions opt;
  opt.tol = tol;
  opt.max_iters = max_iters;
  return minimize(problem, x0, opt);
}

Vec project_simplex(const Vec& y) {
  require_finite(y, "project_simplex");
  const long n = y.size();
  if (n == 0) throw InvalidArgument("project_simplex: empty vector");
  std::vector<double> u(y.data(), y.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (long j = 0; j < n; ++j) {
    cumsum += u[j];
    const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  return (y.array() - theta).max(0.0).matrix();
}

Vec project_box(const Vec& y, const Vec& lo, const Vec& hi) {
  require_dim(lo, y.size());
  require_dim(hi, y.size());
  return y.cwiseMax(lo).cwiseMin(hi);
}

Vec project_box(const Vec& y, double lo, double hi) {
  return y.cwiseMax(lo).cwiseMin(hi);
}

Vec project(const Constraint& constraint, const Vec& y) {
  return std::visit(
      [&](const auto& c) -> Vec {
        using C = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<C, Unconstrained>) {
          return y;
        } else if constexpr (std::is_same_v<C, BoxConstraint>) {
          return project_box(y, c.lo, c.hi);
        } else {
          return project_simplex(y);
        }
      },
      constraint);
}

ScalarRoot solve_increasing(const std::function<double(double)>& g,
                            const std::function<double(double)>& dg, double target, double guess,
                            double tol, int max_iters) {
  ScalarRoot out;
  double t = guess;
  double r = g(t) - target;
  if (r == 0.0) {
    out.t = t;
    return out;
  }
  // Bracket [lo, hi] with g(lo) < target < g(hi).
  double lo, hi;
  double step = std::max(1.0, std::abs(guess));
  if (r < 0.0) {
    lo = t;
    hi = t + step;
    while (g(hi) - target < 0.0) {
      lo = hi;
      step *= 2.0;
      hi += step;
      if (!std::isfinite(hi)) throw NonConvergence("solve_increasing: bracket expansion", std::abs(r));
    }
  } else {
    hi = t;
    lo = t - step;
    while (g(lo) - target > 0.0) {
      hi = lo;
      step *= 2.0;
      lo -= step;
      if (!std::isfinite(lo)) throw NonConvergence("solve_increasing: bracket expansion", std::abs(r));
    }
  }
  t = std::clamp(t, lo, hi);
  r = g(t) - target;
  for (int it = 0; it < max_iters; ++it) {
    out.iters = it + 1;
    if (r == 0.0) break;
    if (r < 0.0) lo = t; else hi = t;
    if (hi - lo <= tol * std::max(1.0, std::abs(t))) break;
    double next = 0.5 * (lo + hi);
    if (dg) {
      const double d = dg(t);
      if (std::isfinite(d) && d > 0.0) {
        const double newton = t - r / d;
        if (newton > lo && newton < hi) next = newton;
      }
    }
    if (next == t) next = 0.5 * (lo + hi);
    if (next <= lo || next >= hi) {
      // Bracket has collapsed to adjacent floating point numbers.
      const double rlo = g(lo) - target, rhi = g(hi) - target;
      t = std::abs(rlo) <= std::abs(rhi) ? lo : hi;
      r = std::abs(rlo) <= std::abs(rhi) ? rlo : rhi;
      break;
    }
    t = next;
    r = g(t) - target;
  }
  out.t = t;
  return out;
}

ConcaveSupResult sup_separable_concave(const Vec& c, const Vec& y, const ProxKernel& kernel,
                                       const Constraint& constraint, double tol) {
  if (!kernel.separable()) throw InvalidArgument("sup_separable_concave requires a separable kernel");
  require_dim(y, c.size());
  require_dim(c, kernel.dimension());
  require_finite(c, "sup_separable_concave");
  require_finite(y, "sup_separable_concave");
  const long m = c.size();
  ConcaveSupResult out;
  out.eta.resize(m);

  if (std::holds_alternative<Unconstrained>(constraint)) {
    for (long i = 0; i < m; ++i) out.eta[i] = y[i] - kernel.coord_grad_phi_star(-c[i]);
  } else if (const auto* box = std::get_if<BoxConstraint>(&constraint)) {
    require_dim(box->lo, m);
    require_dim(box->hi, m);
    for (long i = 0; i < m; ++i) {
      out.eta[i] = std::clamp(y[i] - kernel.coord_grad_phi_star(-c[i]), box->lo[i], box->hi[i]);
    }
  } else {
    // eta_i(mu) = max(0, y_i - grad phi_i^*(mu - c_i)) is nonincreasing in mu.
    auto eta_at = [&](double mu, long i) {
      return std::max(0.0, y[i] - kernel.coord_grad_phi_star(mu - c[i]));
    };
    auto deficit = [&](double mu) {
      double sum = 0.0;
      for (long i = 0; i < m; ++i) sum += eta_at(mu, i);
      return 1.0 - sum;
    };
    auto deficit_slope = [&](double mu) {
      double slope = 0.0;
      for (long i = 0; i < m; ++i) {
        if (y[i] - kernel.coord_grad_phi_star(mu - c[i]) > 0.0) {
          const auto h = kernel.coord_hess_phi_star(mu - c[i]);
          if (!h) return std::numeric_limits<double>::infinity();
          slope += *h;
        }
      }
      return slope;
    };
    double guess = c.maxCoeff();
    const ScalarRoot root = solve_increasing(deficit, deficit_slope, 0.0, guess, tol, 600);
    out.multiplier = root.t;
    out.iters = root.iters;
    for (long i = 0; i < m; ++i) out.eta[i] = eta_at(root.t, i);
    // Steep conjugate gradients leave a small deficit even at a rounding-level
    // bracket; rescaling keeps eta feasible.
    const double sum = out.eta.sum();
    if (sum > 0.0) out.eta /= sum;
  }
  double value = c.dot(out.eta);
  for (long i = 0; i < m; ++i) value -= kernel.coord_phi(y[i] - out.eta[i]);
  out.value = value;
  return out;
}

}  // namespace aniso
