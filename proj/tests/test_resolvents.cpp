#include <cmath>
#include <random>

#include "doctest.h"

#include "aniso/resolvents.hpp"

using namespace aniso;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec random_vec(std::mt19937_64& rng, long n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec v(n);
  for (long i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

std::vector<ProxKernel> kernels2() {
  return {ProxKernel::separable_power(2, 1.5), ProxKernel::separable_power(2, 2.0),
          ProxKernel::separable_power(2, 3.0), ProxKernel::separable_power(2, 4.0),
          ProxKernel::isotropic_power(2, 3.0), ProxKernel::cosh(2)};
}

std::vector<OperatorSpec> ops2() {
  return {OperatorSpec::zero(2), OperatorSpec::identity(2), growth_instance_linear(), OperatorSpec::skew2()};
}

double inf_norm(const Vec& v) { return v.lpNorm<Eigen::Infinity>(); }

}  // namespace

TEST_CASE("closed-form resolvents") {
  const Vec x = vec2(2, 4);
  const auto zero = anisotropic_resolvent(OperatorSpec::zero(2), ProxKernel::separable_power(2, 3.0), x);
  CHECK(inf_norm(zero.z - x) == 0.0);
  CHECK(inf_norm(zero.v) == 0.0);

  const auto half = anisotropic_resolvent(OperatorSpec::identity(2), ProxKernel::separable_power(2, 2.0), x);
  CHECK(inf_norm(half.z - x / 2) <= 1e-14);

  // z + z^{1/3} = 2 has the root z = 1.
  Vec one(1);
  one << 2.0;
  const auto r = anisotropic_resolvent(OperatorSpec::identity(1), ProxKernel::separable_power(1, 4.0), one);
  CHECK(r.z[0] == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("scalar equation oracle for the quartic kernel") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    const double x = std::uniform_real_distribution<double>(-5, 5)(rng);
    double lo = -10, hi = 10;
    for (int k = 0; k < 200; ++k) {
      const double mid = 0.5 * (lo + hi);
      (mid + std::cbrt(mid) < x ? lo : hi) = mid;
    }
    Vec xv(1);
    xv << x;
    const auto r = anisotropic_resolvent(OperatorSpec::identity(1), ProxKernel::separable_power(1, 4.0), xv);
    CHECK(r.z[0] == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-12));
  }
}

TEST_CASE("resolvent outputs satisfy the inclusion") {
  std::mt19937_64 rng(2);
  for (const auto& op : ops2()) {
    for (const auto& k : kernels2()) {
      CAPTURE(op.name());
      CAPTURE(k.describe());
      for (int i = 0; i < 50; ++i) {
        const Vec x = random_vec(rng, 2, -5, 5);
        const auto r = anisotropic_resolvent(op, k, x);
        CHECK(r.converged);
        CHECK(resolvent_residual(op, k, x, r) <= 1e-11);
        CHECK(inf_norm(r.v - k.grad_phi(x - r.z)) == 0.0);
        CHECK(inf_norm(r.z + k.grad_phi_star(op.eval(r.z)) - x) <= 1e-10);
      }
    }
  }
}

TEST_CASE("known zeros are fixed points") {
  const auto op = growth_instance_linear();
  for (const auto& k : kernels2()) {
    const auto r = anisotropic_resolvent(op, k, *op.known_zero());
    CHECK(inf_norm(r.z - *op.known_zero()) <= 1e-12);
    CHECK(inf_norm(r.v) <= 1e-12);
  }
}

TEST_CASE("halfspace separation of the prox center") {
  std::mt19937_64 rng(3);
  for (const auto& k : kernels2()) {
    for (int i = 0; i < 30; ++i) {
      const Vec x = random_vec(rng, 2, -5, 5);
      const auto r = anisotropic_resolvent(OperatorSpec::skew2(), k, x);
      CHECK((x - r.z).dot(r.v) > 0.0);
    }
  }
}

TEST_CASE("scalar and Newton paths agree on diagonal operators") {
  std::mt19937_64 rng(4);
  std::vector<ScalarMap> maps = {
      {[](double t) { return t * t * t + t; }, [](double t) { return 3 * t * t + 1; }},
      {[](double t) { return std::atan(t) + 0.5 * t; }, [](double t) { return 1 / (1 + t * t) + 0.5; }},
      {[](double t) { return std::sinh(t) - 1; }, [](double t) { return std::cosh(t); }}};
  const auto op = OperatorSpec::diagonal(maps);
  for (const auto& k : {ProxKernel::separable_power(3, 1.5), ProxKernel::separable_power(3, 3.0),
                        ProxKernel::cosh(3), ProxKernel::exp_penalty(3, 0.5)}) {
    SolverTolerances scalar, newton;
    scalar.path = ResolventPath::Scalar;
    newton.path = ResolventPath::Newton;
    for (int i = 0; i < 30; ++i) {
      const Vec x = random_vec(rng, 3, -3, 3);
      const auto a = anisotropic_resolvent(op, k, x, scalar);
      const auto b = anisotropic_resolvent(op, k, x, newton);
      CHECK(inf_norm(a.z - b.z) <= 1e-10);
    }
  }
}

TEST_CASE("minimization path matches the affine Newton path") {
  SmoothOracle f;
  Vec c = vec2(1.0, -0.5);
  f.value = [&](const Vec& x) { return 0.5 * x.squaredNorm() - c.dot(x); };
  f.gradient = [&](const Vec& x) { return Vec(x - c); };
  const auto sub = OperatorSpec::subdifferential(f, 2);
  const auto aff = OperatorSpec::affine(Mat::Identity(2, 2), c);
  std::mt19937_64 rng(5);
  for (const auto& k : {ProxKernel::separable_power(2, 3.0), ProxKernel::cosh(2)}) {
    for (int i = 0; i < 10; ++i) {
      const Vec x = random_vec(rng, 2, -3, 3);
      CHECK(inf_norm(anisotropic_resolvent(sub, k, x).z - anisotropic_resolvent(aff, k, x).z) <= 1e-9);
    }
  }
}

TEST_CASE("constrained subdifferential resolvent projects with the kernel") {
  // f = 0 on the box [-1,1]^2 with a separable kernel: z = clamp(x).
  SmoothOracle f;
  f.value = [](const Vec&) { return 0.0; };
  f.gradient = [](const Vec& x) { return Vec(Vec::Zero(x.size())); };
  const auto op = OperatorSpec::subdifferential(f, 2, BoxConstraint{Vec::Constant(2, -1), Vec::Constant(2, 1)});
  const auto r = anisotropic_resolvent(op, ProxKernel::separable_power(2, 3.0), vec2(2.5, 0.3));
  CHECK(r.z[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(r.z[1] == doctest::Approx(0.3).epsilon(1e-8));
}

TEST_CASE("Bregman resolvent closed forms") {
  const Vec w = vec2(2, -2);
  const auto k2 = ProxKernel::separable_power(2, 2.0);
  CHECK(inf_norm(bregman_resolvent(OperatorSpec::zero(2), ProxKernel::separable_power(2, 3.0), w) - w) <= 1e-14);
  CHECK(inf_norm(bregman_resolvent(OperatorSpec::identity(2), k2, w) - vec2(1, -1)) <= 1e-14);
}

TEST_CASE("Bregman resolvent of an inverse agrees with the anisotropic resolvent") {
  std::mt19937_64 rng(6);
  const auto k = ProxKernel::separable_power(2, 4.0);
  const auto id = OperatorSpec::identity(2);
  for (int i = 0; i < 20; ++i) {
    const Vec x = random_vec(rng, 2, -4, 4);
    const Vec u = bregman_resolvent(OperatorSpec::inverse(id), k, k.grad_phi(x));
    const Vec z = anisotropic_resolvent(id, k, x).z;
    CHECK(inf_norm(z - (x - k.grad_phi_star(u))) <= 1e-10);
  }
}

TEST_CASE("Moreau decomposition") {
  std::mt19937_64 rng(7);
  for (const auto& op : ops2()) {
    for (const auto& k : kernels2()) {
      double worst = 0;
      for (int i = 0; i < 30; ++i) worst = std::max(worst, moreau_residual(op, k, random_vec(rng, 2, -5, 5)));
      CHECK(worst <= 1e-8);
    }
  }
  CheckMutation flip;
  flip.flip_grad_phi_star_sign = true;
  CHECK(moreau_residual(growth_instance_linear(), ProxKernel::separable_power(2, 3.0), vec2(1, 1), {}, flip) > 1e-3);
}

TEST_CASE("relaxation absorption") {
  std::mt19937_64 rng(8);
  const auto grow = growth_instance_linear();
  const auto k3 = ProxKernel::separable_power(2, 3.0);
  for (int i = 0; i < 20; ++i) {
    const Vec x = random_vec(rng, 2, -5, 5);
    CHECK(relaxation_absorption_residual(grow, k3, x, 1.0, 0.0) <= 1e-12);
    CHECK(relaxation_absorption_residual(grow, k3, x, 0.5, 0.5) <= 1e-8);
  }
  // Identity, quadratic kernel, tau = rho = 1: T_1 = id/2 so the left side is 2x/3.
  const Vec x = vec2(3, -1.5);
  const Vec lhs = anisotropic_resolvent(OperatorSpec::yosida(OperatorSpec::identity(2), 1.0, ProxKernel::separable_power(2, 2.0)),
                                        ProxKernel::separable_power(2, 2.0), x)
                      .z;
  CHECK(inf_norm(lhs - 2.0 * x / 3.0) <= 1e-14);
  CHECK(relaxation_absorption_residual(OperatorSpec::identity(2), ProxKernel::separable_power(2, 2.0), x, 1.0, 1.0) <=
        1e-14);
}

TEST_CASE("D-firm nonexpansiveness") {
  std::mt19937_64 rng(9);
  std::vector<std::pair<Vec, Vec>> pairs;
  for (int i = 0; i < 200; ++i) pairs.emplace_back(random_vec(rng, 2, -5, 5), random_vec(rng, 2, -5, 5));
  CHECK(std::abs(dfirm_violation(OperatorSpec::zero(2), ProxKernel::separable_power(2, 3.0), pairs)) <= 1e-12);
  for (double p : {2.0, 3.0}) {
    CHECK(dfirm_violation(OperatorSpec::inverse(growth_instance_linear()), ProxKernel::separable_power(2, p), pairs) >=
          -1e-9);
  }
  // p = 2, S = identity: A(x) = x/2, slack = ||x - y||^2 / 4.
  const auto& [a, b] = pairs.front();
  const double slack = dfirm_violation(OperatorSpec::identity(2), ProxKernel::separable_power(2, 2.0), {{a, b}});
  CHECK(slack == doctest::Approx((a - b).squaredNorm() / 4).epsilon(1e-12));
}

TEST_CASE("resolvent errors") {
  SolverTolerances bad;
  bad.residual_tol = 0;
  CHECK_THROWS_AS(anisotropic_resolvent(OperatorSpec::skew2(), ProxKernel::cosh(2), vec2(1, 1), bad), InvalidArgument);
  CHECK_THROWS_AS(anisotropic_resolvent(OperatorSpec::skew2(), ProxKernel::cosh(3), vec2(1, 1)), DimensionMismatch);
  SolverTolerances scalar;
  scalar.path = ResolventPath::Scalar;
  CHECK_THROWS_AS(anisotropic_resolvent(OperatorSpec::skew2(), ProxKernel::cosh(2), vec2(1, 1), scalar), InvalidArgument);
  SolverTolerances starved;
  starved.max_iters = 1;
  CHECK_THROWS_AS(anisotropic_resolvent(OperatorSpec::skew2(), ProxKernel::separable_power(2, 4.0), vec2(3, 1), starved),
                  NonConvergence);
}
