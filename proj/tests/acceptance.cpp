// Acceptance checks: one PASS/FAIL line per criterion, tolerances pinned below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "aniso/alm.hpp"
#include "aniso/cli.hpp"
#include "aniso/operators.hpp"
#include "aniso/ppa.hpp"
#include "aniso/resolvents.hpp"

using namespace aniso;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec random_vec(SeededUniform& rng, long n, double lo, double hi) {
  Vec v(n);
  for (long i = 0; i < n; ++i) v[i] = rng(lo, hi);
  return v;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

PpaConfig ppa(const ProxKernel& k, double lambda, int max_outer, double dual_norm_tol = 1e-10) {
  PpaConfig c(k);
  c.lambda = lambda;
  c.max_outer = max_outer;
  c.stop.dual_norm_tol = dual_norm_tol;
  return c;
}

const CheckRow& row(const std::vector<CheckRow>& rows, const std::string& name) {
  for (const auto& r : rows) {
    if (r.name == name) return r;
  }
  throw Error("missing check " + name);
}

Outcome nonmonotonicity_witnesses() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto skew = OperatorSpec::skew2();
  const double sep = probe_nonmonotonicity(skew, ProxKernel::separable_power(2, 4.0), {{vec2(1, 2), vec2(0, 0)}});
  const double iso = probe_nonmonotonicity(skew, ProxKernel::isotropic_power(2, 4.0 / 3.0), {{vec2(1, 4), vec2(2, 3)}});
  const double ms = 1e3 * seconds_since(t0);
  const double e1 = std::abs(sep - (std::cbrt(2.0) - 2.0));
  const double e2 = std::abs(iso + 20.0);
  return {e1 <= 1e-12 && e2 <= 1e-9 && ms < 1.0,
          fmt::format("separable {:.15f} (err {:.1e} <= 1e-12), isotropic {:.12f} (err {:.1e} <= 1e-9), {:.3f} ms < 1 ms",
                      sep, e1, iso, e2, ms)};
}

std::vector<CheckRow> verify_rows;
double verify_seconds = 0.0;

Outcome identity_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  VerifyOptions opts;
  opts.points = 100;
  verify_rows = verify_identities(opts);
  verify_seconds = seconds_since(t0);
  const auto& m = row(verify_rows, "moreau_decomposition");
  const auto& r = row(verify_rows, "relaxation_absorption");
  return {m.worst <= 1e-8 && r.worst <= 1e-8 && verify_seconds < 30.0,
          fmt::format("Moreau worst {:.2e}, relaxation absorption worst {:.2e} (<= 1e-8), {:.2f} s < 30 s", m.worst,
                      r.worst, verify_seconds)};
}

Outcome algebraic_identities() {
  const auto& d = row(verify_rows, "bregman_duality");
  const auto& t = row(verify_rows, "three_point");
  return {d.worst <= 1e-12 && t.worst <= 1e-12,
          fmt::format("duality worst {:.2e}, three-point worst {:.2e} (<= 1e-12, relative)", d.worst, t.worst)};
}

Outcome dual_fejer_skew() {
  const auto k = ProxKernel::separable_power(2, 4.0);
  const auto t = run_ppa(OperatorSpec::skew2(), ppa(k, 1.0, 200, -1.0), vec2(3, 3));
  double min_slack = INFINITY;
  for (double s : fejer_report(t)) min_slack = std::min(min_slack, s);
  const double q = k.conjugate_exponent();
  auto lq = [q](const Vec& x) { return x.array().abs().pow(q).sum() / q; };
  bool lq_monotone = true;
  int l2_increases = 0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (lq(t.records[i].x) > lq(t.records[i - 1].x) * (1 + 1e-12)) lq_monotone = false;
    if (t.records[i].x.norm() > t.records[i - 1].x.norm()) ++l2_increases;
  }
  return {t.size() == 200 && min_slack >= -1e-10 && lq_monotone && l2_increases > 0,
          fmt::format("{} iterations, min slack {:.2e} >= -1e-10, l_q energy nonincreasing: {}, l2 increases: {}",
                      t.size(), min_slack, lq_monotone ? "yes" : "no", l2_increases)};
}

Outcome isotropic_linear_rate() {
  const auto op = growth_instance_linear();
  const auto t = run_ppa(op, ppa(ProxKernel::isotropic_power(2, 2.0), 1.0, 400), vec2(0, 0));
  const double q = tail_q_factor(dist_2_column(t), 20);
  const double bound = 2.0 / std::sqrt(5.0) + 0.02;
  return {q <= bound, fmt::format("tail Q-factor {:.6f} <= {:.6f} (2/sqrt(5) = {:.6f})", q, bound, 2.0 / std::sqrt(5.0))};
}

Outcome anisotropic_superlinear() {
  const auto op = growth_instance_linear();
  const auto t = run_ppa(op, ppa(ProxKernel::separable_power(2, 3.0), 1.0, 25, 1e-12), vec2(0, 0));
  const auto est = estimate_order(dist_p_column(t), 4);
  const bool reached = t.stop == StopReason::DualNorm && t.records.back().dual_norm <= 1e-12;
  return {est.order >= 1.9 && reached,
          fmt::format("order {:.4f} >= 1.9 (last {} pairs, rate {:.3f}), ||v|| = {:.1e} <= 1e-12 after {} iterations",
                      est.order, est.pairs_used, est.rate, t.records.back().dual_norm, t.size())};
}

Outcome relaxation_yosida() {
  const auto op = growth_instance_linear();
  const auto k = ProxKernel::separable_power(2, 3.0);
  const auto a = run_ppa(op, ppa(k, 0.5, 30, 0.0), vec2(0, 0));
  const auto b = run_ppa(OperatorSpec::yosida(op, 0.5, k), ppa(k.epi_scaled(0.5), 1.0, 30, 0.0), vec2(0, 0));
  double worst = 0.0;
  const bool same = a.size() == b.size() && a.size() == 30;
  for (std::size_t i = 0; same && i < a.size(); ++i) {
    worst = std::max(worst, (a.records[i].v - b.records[i].v).lpNorm<Eigen::Infinity>());
  }
  return {same && worst <= 1e-8, fmt::format("{} iterations, max dual gap {:.2e} <= 1e-8", a.size(), worst)};
}

Outcome uniform_monotone() {
  bool ok = true;
  int worst_iters = 0;
  double worst_norm = 0.0;
  for (const auto& k : {ProxKernel::separable_power(3, 2.0), ProxKernel::separable_power(3, 4.0), ProxKernel::cosh(3)}) {
    for (double lambda : {1.0, 0.5}) {
      const auto rep = uniform_monotone_suite(k, lambda, 500, 1e-8);
      ok = ok && rep.converged && rep.iterations <= 500;
      worst_iters = std::max(worst_iters, rep.iterations);
      worst_norm = std::max(worst_norm, rep.final_norm);
    }
  }
  return {ok, fmt::format("6 runs, slowest reached ||x|| <= 1e-8 at iteration {} <= 500, final norms <= {:.1e}",
                          worst_iters, worst_norm)};
}

Outcome alm_game() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto g = build_zero_sum_game(30, 32, 7);
  const Vec x0 = Vec::Constant(30, 1.0 / 30), y0 = Vec::Constant(32, 1.0 / 32);
  struct Variant {
    std::string name;
    ProxKernel primal, dual;
    double tol;
  };
  const std::vector<Variant> variants = {
      {"quadratic", ProxKernel::separable_power(30, 2.0), ProxKernel::separable_power(32, 2.0), 1e-6},
      {"sep p=3", ProxKernel::separable_power(30, 3.0), ProxKernel::separable_power(32, 2.0), 1e-5},
      {"sep p=4", ProxKernel::separable_power(30, 4.0), ProxKernel::separable_power(32, 2.0), 1e-5},
      {"exp rho=0.01", ProxKernel::separable_power(30, 2.0), ProxKernel::exp_penalty(32, 0.01), 1e-5},
  };
  bool ok = true;
  std::string detail;
  for (const auto& v : variants) {
    AlmConfig c(v.primal, v.dual);
    c.max_outer = 300;
    c.gap_tol = v.tol;
    const auto t = run_alm(g, c, x0, y0);
    ok = ok && t.reached_tolerance;
    detail += fmt::format("{}: gap {:.1e} <= {:.0e} in {} its; ", v.name, t.records.back().gap, v.tol, t.size());
  }
  const double s = seconds_since(t0);
  return {ok && s < 120.0, detail + fmt::format("{:.2f} s < 120 s", s)};
}

Outcome alm_regression() {
  const auto r = build_l1_regression(29, 30, 0.1, 7);
  AlmConfig base(ProxKernel::separable_power(29, 2.0), ProxKernel::separable_power(30, 2.0));
  base.max_outer = 300;
  const double ref = reference_optimum(r, base);
  bool ok = true;
  std::string detail = fmt::format("baseline {:.12f}; ", ref);
  for (const auto& [name, primal, dual] :
       {std::tuple{"quadratic", ProxKernel::separable_power(29, 2.0), ProxKernel::separable_power(30, 2.0)},
        std::tuple{"cosh", ProxKernel::cosh(29), ProxKernel::cosh(30)}}) {
    AlmConfig c(primal, dual);
    c.max_outer = 300;
    const auto t = run_alm(r, c, Vec::Zero(29), Vec::Zero(30));
    const double sub = std::abs(t.records.back().primal_value - ref);
    ok = ok && sub <= 1e-6;
    detail += fmt::format("{}: suboptimality {:.1e} <= 1e-6; ", name, sub);
  }
  return {ok, detail};
}

Outcome alm_as_ppa() {
  const auto eq = build_equality_quadratic(Mat::Identity(2, 2), vec2(1, 1));
  AlmConfig c(ProxKernel::separable_power(2, 2.0), ProxKernel::separable_power(2, 2.0));
  c.max_outer = 50;
  const Vec x0 = vec2(3, -1), y0 = vec2(0, 2);
  const auto alm = run_alm(eq, c, x0, y0);
  Vec w0(4);
  w0 << x0, y0;
  const auto p = run_ppa(saddle_operator(eq), ppa(ProxKernel::separable_power(4, 2.0), 1.0, 51, -1.0), w0);
  double worst = 0.0;
  for (std::size_t k = 0; k < alm.size(); ++k) {
    Vec w(4);
    w << alm.records[k].x, alm.records[k].y;
    worst = std::max(worst, (w - p.records[k + 1].x).lpNorm<Eigen::Infinity>());
  }
  return {alm.size() == 50 && worst <= 1e-8, fmt::format("{} iterations, component gap {:.2e} <= 1e-8", alm.size(), worst)};
}

Outcome dfirm() {
  SeededUniform rng(12);
  std::vector<std::pair<Vec, Vec>> pairs;
  for (int i = 0; i < 200; ++i) pairs.emplace_back(random_vec(rng, 2, -5, 5), random_vec(rng, 2, -5, 5));
  const auto s = OperatorSpec::inverse(growth_instance_linear());
  const double s2 = dfirm_violation(s, ProxKernel::separable_power(2, 2.0), pairs);
  const double s3 = dfirm_violation(s, ProxKernel::separable_power(2, 3.0), pairs);
  return {s2 >= -1e-9 && s3 >= -1e-9, fmt::format("min slack p=2 {:.2e}, p=3 {:.2e} (>= -1e-9)", s2, s3)};
}

std::string read_without_first_line(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::string first;
  std::getline(in, first);
  std::ostringstream rest;
  rest << in.rdbuf();
  return rest.str();
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / fmt::format("aniso_acceptance_{}", std::random_device{}());
  fs::create_directories(dir);
  const std::vector<std::pair<std::string, std::string>> configs = {
      {"ppa.ini", "[experiment]\nkind = ppa_run\n[problem]\nspec = skew2\nx0 = 3, 3\n[kernel]\nspec = sep_power:p=4\n"
                  "[solver]\nmax_outer = 200\ndual_norm_tol = -1\n"},
      {"alm.ini", "[experiment]\nkind = alm_run\nseed = 7\n[problem]\nspec = game:n=30,m=32\n[kernel]\n"
                  "spec = sep_power:p=3\ndual = sep_power:p=2\n[solver]\nmax_outer = 300\ngap_tol = 1e-5\n"},
  };
  bool ok = true;
  std::size_t bytes = 0;
  for (const auto& [name, body] : configs) {
    std::ofstream(dir / name) << body;
    std::ostringstream log, err;
    for (const char* run : {"a", "b"}) {
      if (cmd_run((dir / name).string(), {(dir / name).string() + run, 7, std::nullopt, false}, log, err) != 0) ok = false;
    }
    const auto a = read_without_first_line(dir / (name + "a") / "trace.csv");
    const auto b = read_without_first_line(dir / (name + "b") / "trace.csv");
    ok = ok && !a.empty() && a == b;
    bytes += a.size();
  }
  fs::remove_all(dir);
  return {ok, fmt::format("PPA and ALM traces byte-identical after the timestamp line ({} bytes compared)", bytes)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"nonmonotonicity witnesses", nonmonotonicity_witnesses},
      {"Moreau and relaxation identities", identity_suite},
      {"Bregman duality and three-point identities", algebraic_identities},
      {"dual Fejer monotonicity on the skew example", dual_fejer_skew},
      {"isotropic linear rate", isotropic_linear_rate},
      {"anisotropic superlinear order", anisotropic_superlinear},
      {"relaxation equals Yosida with a scaled kernel", relaxation_yosida},
      {"uniform monotonicity convergence", uniform_monotone},
      {"ALM zero-sum game", alm_game},
      {"ALM l1 regression", alm_regression},
      {"ALM iterates are PPA iterates", alm_as_ppa},
      {"D-firm nonexpansiveness", dfirm},
      {"trace determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s  %2zu  %-46s %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), seconds_since(t0));
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
