#include "doctest.h"

#include <cmath>
#include <numbers>

#include "contactlab/decay_lab.hpp"
#include "contactlab/errors.hpp"
#include "contactlab/models.hpp"
#include "contactlab/rng.hpp"

using namespace contactlab;
using std::numbers::pi;

namespace {

SpectralOperator scalar_operator(double a, int n_modes, double period = 1.0) {
  const Mat s = a * Mat::Identity(2, 2);
  return build_operator(period, HessianData::from_symmetric(2, [s](double) { return s; }), n_modes);
}

// Galerkin coefficients of the constant section v.
Vec constant_section(const SpectralOperator& op, const Vec& v) {
  Vec c = Vec::Zero(op.matrix.rows());
  for (int a = 0; a < op.rank; ++a) c(a * op.basis_size()) = v(a) * std::sqrt(op.period);
  return c;
}

Vec e1() { return Vec::Unit(2, 0); }

}  // namespace

TEST_CASE("growth factor") {
  CHECK(growth_factor(0.4) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(growth_factor(0.5 - 1e-12) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(gamma_of_c(1.0) == doctest::Approx(1.0 / (std::exp(1.0) + std::exp(-1.0))));
  CHECK(std::abs(growth_factor(gamma_of_c(1.0)) - std::exp(1.0)) < 1e-12);
  for (int i = 0; i <= 100; ++i) {
    const double c = 0.01 + (5.0 - 0.01) * i / 100.0;
    CHECK(std::abs(growth_factor(gamma_of_c(c)) / std::exp(c) - 1.0) < 1e-12);
  }
  CHECK_THROWS_AS(growth_factor(0.5), OutOfRange);
  CHECK_THROWS_AS(growth_factor(0.0), OutOfRange);
  CHECK_THROWS_AS(gamma_of_c(0.0), OutOfRange);
}

TEST_CASE("three-interval bound") {
  const double c = 0.8;
  std::vector<double> x;
  for (int k = 0; k <= 20; ++k) x.push_back(std::exp(-c * k));
  const ThreeIntervalResult r = three_interval_bound(x, gamma_of_c(c));
  CHECK(r.hypothesis_holds);
  CHECK(r.bound_holds);

  // Faster decay still satisfies the hypothesis, and x_k ≤ x_0 e^{−ck}.
  std::vector<double> y;
  for (int k = 0; k <= 200; ++k) y.push_back(3.0 * std::exp(-1.3 * k));
  const ThreeIntervalResult ry = three_interval_bound(y, gamma_of_c(c));
  CHECK(ry.hypothesis_holds);
  for (int k = 0; k <= 200; ++k) CHECK(y[k] <= y[0] * std::exp(-c * k) + 1e-15);

  const ThreeIntervalResult bad = three_interval_bound({1.0, 1.0, 1.0}, 0.4);
  CHECK_FALSE(bad.hypothesis_holds);
  REQUIRE(bad.violations.size() == 1);
  CHECK(bad.violations[0] == 1);
  CHECK_THROWS_AS(three_interval_bound({1.0, -1.0}, 0.3), OutOfRange);
}

TEST_CASE("three-interval bound on random sequences") {
  CounterRng rng(31, 0);
  int checked = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform() * 49.0);
    const double gamma = rng.uniform(0.05, 0.49);
    // Build x_k = γ(x_{k−1} + x_{k+1}) − s_k with s_k ≥ 0 by sweeping from the ends.
    std::vector<double> x(n + 1);
    x[0] = rng.uniform(0.0, 2.0);
    x[n] = rng.uniform(0.0, 2.0);
    for (int k = 1; k < n; ++k) x[k] = rng.uniform(0.0, 1.0);
    for (int sweep = 0; sweep < 200; ++sweep)
      for (int k = 1; k < n; ++k) x[k] = std::min(x[k], gamma * (x[k - 1] + x[k + 1]));
    const ThreeIntervalResult r = three_interval_bound(x, gamma);
    if (!r.hypothesis_holds) continue;
    ++checked;
    CHECK(r.bound_holds);
  }
  CHECK(checked > 1900);
}

TEST_CASE("cylinder eigen-expansion closed forms") {
  const SpectralOperator op = scalar_operator(-0.5, 8);  // λ₁ = 0.5 on constants
  CylinderGrid grid{4.0, 41, 32};

  SUBCASE("homogeneous eigenmode") {
    const CylinderField f = solve_cylinder(op, {}, constant_section(op, e1()), grid);
    for (std::size_t i = 0; i < f.taus.size(); ++i)
      CHECK(std::abs(f.slice_norms[i] - std::exp(-0.5 * f.taus[i])) < 1e-12);
    CHECK(std::abs(f.slices[10](0, 3) - std::exp(-0.5 * f.taus[10])) < 1e-12);
  }
  SUBCASE("forced mode") {
    Forcing L{1.5, constant_section(op, e1())};
    const CylinderField f = solve_cylinder(op, L, 2.0 * constant_section(op, e1()), grid);
    for (std::size_t i = 0; i < f.taus.size(); ++i) {
      const double t = f.taus[i];
      const double p = 1.0 / (0.5 - 1.5);
      CHECK(std::abs(f.slices[i](0, 0) - ((2.0 - p) * std::exp(-0.5 * t) + p * std::exp(-1.5 * t))) <
            1e-12);
    }
  }
  SUBCASE("resonant forcing") {
    Forcing L{0.5, constant_section(op, e1())};
    const CylinderField f = solve_cylinder(op, L, constant_section(op, e1()), grid);
    for (std::size_t i = 0; i < f.taus.size(); ++i)
      CHECK(std::abs(f.slices[i](0, 0) - (1.0 + f.taus[i]) * std::exp(-0.5 * f.taus[i])) < 1e-12);
  }
  SUBCASE("kernel data is conserved") {
    const SpectralOperator free_op = scalar_operator(0.0, 8);
    Vec z0 = constant_section(free_op, Vec::Ones(2));
    z0(3) = 0.2;  // a stable/unstable pair at k = 1
    const CylinderField f = solve_cylinder(free_op, {}, z0, grid);
    for (const Mat& s : f.slices) CHECK(std::abs(s.row(0).mean() - 1.0) < 1e-12);
    CHECK(std::abs(f.slice_norms.back() - std::sqrt(2.0)) < 1e-6);
  }
}

TEST_CASE("unstable modes are pinned at τ = R") {
  const SpectralOperator op = scalar_operator(0.5, 4);  // constants: λ = −0.5
  CylinderGrid grid{6.0, 61, 16};
  Forcing L{1.0, constant_section(op, e1())};
  const CylinderField f = solve_cylinder(op, L, constant_section(op, e1()), grid);
  CHECK(f.slice_norms.back() < 1e-12);
  for (const double n : f.slice_norms) CHECK(std::isfinite(n));
}

TEST_CASE("cylinder solver input validation") {
  const SpectralOperator op = scalar_operator(-0.5, 8);
  CHECK_THROWS_AS(solve_cylinder(op, {}, Vec::Zero(5), {}), ModeMismatch);
  CHECK_THROWS_AS(solve_cylinder(op, {}, Vec::Zero(op.matrix.rows()), {1.0, 10, 16}),
                  ResolutionTooCoarse);
  CHECK_THROWS_AS(solve_cylinder_cn(op, {}, {}, Vec::Zero(op.matrix.rows()), {1.0, 10, 32}),
                  HypothesisViolated);
}

TEST_CASE("Crank-Nicolson agrees with the eigen-expansion to second order") {
  const SpectralOperator op = scalar_operator(-13.0, 2);  // all eigenvalues > 0
  CounterRng rng(32, 0);
  const Vec z0 = rng.normal_vec(static_cast<int>(op.matrix.rows()));
  Forcing L{0.7, rng.normal_vec(static_cast<int>(op.matrix.rows()))};
  double prev = 0.0;
  for (int level = 0; level < 3; ++level) {
    const int n_tau = 20 * (1 << level) + 1;
    CylinderGrid grid{2.0, n_tau, 8};
    const CylinderField exact = solve_cylinder(op, L, z0, grid);
    const CylinderField cn = solve_cylinder_cn(op, {}, L, z0, grid);
    double gap = 0.0;
    for (int i = 0; i < n_tau; ++i) gap = std::max(gap, (exact.coeffs[i] - cn.coeffs[i]).norm());
    if (level > 0) CHECK(prev / gap >= 3.5);
    prev = gap;
  }
}

TEST_CASE("Crank-Nicolson with τ-dependent S converges") {
  // Constant sections only: B = 1 there, relaxed by e^{−τ}.
  const SpectralOperator op = scalar_operator(-1.0, 0);
  const auto p = [](double tau) -> Mat { return std::exp(-tau) * Mat::Identity(2, 2); };
  const Vec z0 = constant_section(op, e1());
  std::vector<double> finals;
  for (int n_tau : {21, 41, 81}) {
    const CylinderField f = solve_cylinder_cn(op, p, {}, z0, {2.0, n_tau, 8});
    finals.push_back(f.slice_norms.back());
  }
  const double exact = std::exp(-(2.0 + 1.0 - std::exp(-2.0)));
  CHECK(std::abs(finals[1] - exact) < std::abs(finals[0] - exact) / 3.5);
  CHECK(std::abs(finals[2] - exact) < std::abs(finals[1] - exact) / 3.5);
}

TEST_CASE("decay rate fits") {
  std::vector<double> taus, norms;
  for (int i = 0; i < 200; ++i) {
    taus.push_back(0.1 * i);
    norms.push_back(5.0 * std::exp(-0.7 * taus.back()));
  }
  const DecayFit fit = decay_rate(taus, norms);
  CHECK(std::abs(fit.delta_hat - 0.7) < 1e-6);
  CHECK(fit.r_squared > 0.999999);
  CHECK_FALSE(fit.tail_window);

  const SpectralOperator op = scalar_operator(-pi, 8);
  const CylinderField f = solve_cylinder(op, {}, constant_section(op, e1()), {10.0, 201, 32});
  CHECK(std::abs(decay_rate(f).delta_hat / pi - 1.0) < 0.01);

  Forcing L{0.6, constant_section(op, e1())};
  const CylinderField g = solve_cylinder(op, L, constant_section(op, e1()), {20.0, 401, 32});
  CHECK(std::abs(decay_rate(g).delta_hat / 0.6 - 1.0) < 0.02);

  // Only a handful of slices below the window threshold.
  std::vector<double> t2 = {0, 1, 2, 3}, n2 = {1.0, 0.5, 0.05, 0.01};
  CHECK_THROWS_AS(decay_rate(t2, n2), InsufficientDecay);

  // No decay at all: tail window, rate ~ 0.
  std::vector<double> flat(taus.size(), 2.0);
  const DecayFit tail = decay_rate(taus, flat);
  CHECK(tail.tail_window);
  CHECK(std::abs(tail.delta_hat) < 1e-12);
}

TEST_CASE("center of mass") {
  const FlatTorusModel model = flat_torus_model();
  const int n = 64;
  const double T = 1.0;
  Vec base(3);
  base << 0.3, 0.55, 0.0;

  SUBCASE("Reeb orbit") {
    std::vector<Vec> loop;
    for (int j = 0; j < n; ++j) {
      Vec p = base;
      p(0) += T * j / n;
      loop.push_back(p);
    }
    const CenterOfMassResult r = center_of_mass(model, loop, T);
    CHECK((r.m - base.head(2)).norm() < 1e-12);
    for (int j = 0; j < n; ++j) CHECK(std::abs(r.h(j) - static_cast<double>(j) / n) < 1e-10);
    CHECK(r.mean_residual < 1e-12);
    CHECK(r.xi_residual < 1e-12);
  }
  SUBCASE("offset loop") {
    std::vector<Vec> loop;
    for (int j = 0; j < n; ++j) {
      const double t = static_cast<double>(j) / n;
      Vec p = base;
      p(0) += T * t + 0.01 * std::sin(2.0 * pi * t);        // reparametrization
      p(1) += 0.04 + 0.02 * std::cos(2.0 * pi * t);          // tangential offset
      p(2) = 0.01;                                           // normal offset
      loop.push_back(p);
    }
    const CenterOfMassResult r = center_of_mass(model, loop, T);
    CHECK(std::abs(r.m(0) - base(0)) < 1e-8);
    CHECK(std::abs(r.m(1) - (base(1) + 0.04)) < 1e-8);
    for (int j = 0; j < n; ++j) {
      const double t = static_cast<double>(j) / n;
      CHECK(std::abs(r.h(j) - (t + 0.01 * std::sin(2.0 * pi * t) / T)) < 1e-8);
    }
    CHECK(r.iterations <= 12);
  }
  SUBCASE("outside the tube") {
    std::vector<Vec> loop;
    for (int j = 0; j < n; ++j) {
      Vec p = base;
      p(0) += T * j / n;
      p(2) = 0.5;
      loop.push_back(p);
    }
    CHECK_THROWS_AS(center_of_mass(model, loop, T), OutsideTube);
  }
}

TEST_CASE("mean-zero check") {
  const std::vector<double> w = {std::sqrt(2.0)};
  const TimeMatrixFn dphi = [w](double s) { return models::ellipsoid_flow_derivative(1.0, w, s); };
  const double T = 2.0 * pi;
  Vec v(3);
  v << 0.0, 0.4, -0.3;
  const int n = 64;
  std::vector<Vec> zeta, zero;
  for (int j = 0; j < n; ++j) {
    zeta.push_back(dphi(T * j / n) * v);
    zero.push_back(Vec::Zero(3));
  }
  CHECK((mean_zero_check(dphi, zeta, T) - v).norm() < 1e-12);
  CHECK(mean_zero_check(dphi, zero, T).norm() == 0.0);

  std::vector<Vec> centered;
  const Vec avg = mean_zero_check(dphi, zeta, T);
  for (int j = 0; j < n; ++j) centered.push_back(zeta[j] - dphi(T * j / n) * avg);
  CHECK(mean_zero_check(dphi, centered, T).norm() < 1e-10);
}

TEST_CASE("action and charge of cylinders") {
  const ContactChart chart = models::weighted_ellipsoid(1.0, {std::sqrt(2.0)});
  const double T = 2.0 * pi;  // the θ-circle at the origin
  auto gamma = [](double s) {
    Vec z = Vec::Zero(3);
    z(0) = std::fmod(s, 2.0 * pi);
    return z;
  };
  auto sample = [&](auto fn) {
    std::vector<std::vector<Vec>> w(11, std::vector<Vec>(32));
    for (int i = 0; i < 11; ++i)
      for (int j = 0; j < 32; ++j) w[i][j] = fn(2.0 * i / 10.0, static_cast<double>(j) / 32);
    return w;
  };

  const ActionCharge trivial = action_charge(sample([&](double, double t) { return gamma(T * t); }), 2.0, chart);
  CHECK(std::abs(trivial.action - T) < 1e-10);
  CHECK(std::abs(trivial.charge) < 1e-12);
  CHECK(std::abs(trivial.pi_energy) < 1e-20);

  const ActionCharge moving =
      action_charge(sample([&](double tau, double t) { return gamma(0.3 * tau + T * t); }), 2.0, chart);
  CHECK(std::abs(moving.charge + 0.3) < 1e-10);
  CHECK(std::abs(moving.action - T) < 1e-10);

  const ActionCharge doubled =
      action_charge(sample([&](double, double t) { return gamma(2.0 * T * t); }), 2.0, chart);
  CHECK(std::abs(doubled.action - 2.0 * T) < 1e-10);

  // A fiber bump contributes positive π-energy.
  const ActionCharge bumped = action_charge(sample([&](double tau, double t) {
    Vec z = gamma(T * t);
    z(1) = 0.05 * std::exp(-tau) * std::cos(2.0 * pi * t);
    return z;
  }), 2.0, chart);
  CHECK(bumped.pi_energy > 1e-4);
}
