#include "doctest.h"

#include <cmath>

#include "contactlab/contact_core.hpp"
#include "contactlab/errors.hpp"
#include "contactlab/models.hpp"
#include "contactlab/rng.hpp"
#include "test_support.hpp"

using namespace contactlab;
using contactlab::testing::random_polynomial_perturbation;
using contactlab::testing::reeb_defect;

namespace {

Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

double max_abs(const Vec& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("reeb field of the standard and rescaled Darboux forms") {
  CounterRng rng(11);
  for (int n = 1; n <= 3; ++n) {
    const ContactChart chart = models::darboux(n);
    for (int s = 0; s < 20; ++s) {
      const Vec x = rng.uniform_vec(2 * n + 1, -3.0, 3.0);
      const ReebSolve r = solve_reeb(chart, x);
      CHECK(max_abs(r.field - Vec::Unit(2 * n + 1, 2 * n)) < 1e-12);
      CHECK(r.residual <= 1e-10);
      CHECK(std::isfinite(r.condition));
    }
  }
  const ContactChart scaled = models::darboux(1, 2.5);
  const Vec x = vec3(0.3, -1.2, 0.7);
  CHECK(max_abs(reeb_field(scaled, x) - Vec::Unit(3, 2) / 2.5) < 1e-12);
}

TEST_CASE("reeb field of e^z λ0 satisfies the defining equations") {
  const ContactChart chart = models::exp_scaled_darboux();
  CounterRng rng(12);
  for (int s = 0; s < 25; ++s) {
    const Vec x = rng.uniform_vec(3, -2.0, 2.0);
    const double p = x(1), z = x(2);
    const Vec expected = std::exp(-z) * vec3(0.0, -p, 1.0);
    // oracle: substitute the expected field into λ(X) = 1, X ⌋ dλ = 0
    CHECK(reeb_defect(chart, expected, x) < 1e-12);
    CHECK(max_abs(reeb_field(chart, x) - expected) < 1e-10);
  }
}

TEST_CASE("reeb field rejects a degenerate one-form") {
  // dz on ℝ³ has dλ = 0
  VectorFn lam = [](const Vec&) { return Vec(Vec::Unit(3, 2)); };
  const ContactChart chart("degenerate", 1, lam);
  CHECK_THROWS_AS(reeb_field(chart, Vec::Zero(3)), SingularChart);
  CHECK(chart.contact_volume(Vec::Zero(3)) == doctest::Approx(0.0));
}

TEST_CASE("finite-difference dλ agrees with the analytic one") {
  const ContactChart analytic = models::weighted_ellipsoid(1.0, {1.5, 0.7});
  const ContactChart fd("fd", 2, analytic.lambda_fn());
  CounterRng rng(13);
  for (int s = 0; s < 10; ++s) {
    const Vec x = rng.uniform_vec(5, -0.8, 0.8);
    CHECK((analytic.dlambda(x) - fd.dlambda(x)).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("contact volume is nonzero and sign-consistent") {
  const ContactChart charts[] = {models::darboux(2), models::exp_scaled_darboux(), models::torus(),
                                 models::weighted_ellipsoid(1.0, {2.0})};
  CounterRng rng(14);
  for (const auto& chart : charts) {
    const double v0 = chart.contact_volume(Vec::Zero(chart.dim()));
    CHECK(std::abs(v0) > 1e-6);
    for (int s = 0; s < 30; ++s) {
      const double v = chart.contact_volume(rng.uniform_vec(chart.dim(), -1.0, 1.0));
      CHECK(v * v0 > 0.0);
    }
  }
}

TEST_CASE("project_xi") {
  const ContactChart chart = models::darboux(1);
  const Vec x = vec3(0.4, 2.0, -1.0);
  SUBCASE("kills the Reeb field") { CHECK(max_abs(project_xi(chart, reeb_field(chart, x), x)) < 1e-14); }
  SUBCASE("fixes ξ") {
    const Vec z = vec3(1.0, 0.3, 2.0);  // λ0(z) = 2 − 2·1 = 0
    CHECK(std::abs(chart.lambda(x).dot(z)) < 1e-15);
    CHECK(max_abs(project_xi(chart, z, x) - z) < 1e-14);
  }
  SUBCASE("∂z + ∂q at p = 2") {
    // λ0(Z) = 1 − p = −1, so π(Z) = Z + X = ∂q + 2∂z
    CHECK(max_abs(project_xi(chart, vec3(1.0, 0.0, 1.0), x) - vec3(1.0, 0.0, 2.0)) < 1e-14);
  }
  SUBCASE("idempotent and lands in ξ") {
    CounterRng rng(15);
    const ContactChart e = models::exp_scaled_darboux();
    for (int s = 0; s < 50; ++s) {
      const Vec y = rng.uniform_vec(3, -1.5, 1.5);
      const Vec z = rng.normal_vec(3);
      const Vec pz = project_xi(e, z, y);
      CHECK(max_abs(project_xi(e, pz, y) - pz) < 1e-12);
      CHECK(std::abs(e.lambda(y).dot(pz)) < 1e-12);
    }
  }
}

TEST_CASE("flat_dual on the Darboux chart") {
  const ContactChart chart = models::darboux(1);
  const Vec x = vec3(0.2, 1.7, -0.4);
  CHECK(max_abs(flat_dual(chart, chart.lambda(x), x) - Vec::Unit(3, 2)) < 1e-14);
  CHECK(max_abs(flat_dual(chart, Vec::Unit(3, 0), x) - vec3(0.0, -1.0, 0.0)) < 1e-14);
  CHECK(max_abs(flat_dual(chart, Vec::Unit(3, 1), x) - vec3(1.0, 0.0, 1.7)) < 1e-14);
}

TEST_CASE("flat_dual reproduces the Darboux component formulas") {
  CounterRng rng(16);
  for (int n = 1; n <= 3; ++n) {
    const ContactChart chart = models::darboux(n);
    for (int s = 0; s < 40; ++s) {
      const double alpha0 = rng.uniform(-2.0, 2.0);
      const Vec a = rng.uniform_vec(n, -2.0, 2.0);
      const Vec b = rng.uniform_vec(n, -2.0, 2.0);
      Vec alpha(2 * n + 1);
      alpha << a, b, alpha0;
      const Vec x = rng.uniform_vec(2 * n + 1, -3.0, 3.0);
      double residual = 1.0;
      const Vec v = flat_dual(chart, alpha, x, &residual);
      CHECK(residual <= 1e-10);
      CHECK(max_abs(v - models::darboux_flat_formula(n, alpha0, a, b, x)) < 1e-12);
      // λ(♭α) = α(X_λ)
      CHECK(std::abs(chart.lambda(x).dot(v) - alpha.dot(reeb_field(chart, x))) < 1e-10);
    }
  }
}

TEST_CASE("sharp_dual") {
  const ContactChart chart = models::darboux(1);
  const Vec x = vec3(-0.3, 0.9, 1.1);
  CHECK(max_abs(sharp_dual(chart, reeb_field(chart, x), x) - chart.lambda(x)) < 1e-14);
  // defining equation: (−∂p) ⌋ (dq ∧ dp) = dq
  CHECK(max_abs(sharp_dual(chart, vec3(0.0, -1.0, 0.0), x) - vec3(1.0, 0.0, 0.0)) < 1e-14);
}

TEST_CASE("♭ and ♯ are mutually inverse") {
  CounterRng rng(17);
  const ContactChart charts[] = {models::darboux(1), models::darboux(2), models::darboux(3),
                                 models::exp_scaled_darboux(),
                                 models::weighted_ellipsoid(1.0, {1.0, 2.0})};
  for (const auto& chart : charts) {
    double worst = 0.0;
    for (int s = 0; s < 100; ++s) {
      const Vec x = rng.uniform_vec(chart.dim(), -1.0, 1.0);
      const Vec v = rng.normal_vec(chart.dim());
      const Vec alpha = rng.normal_vec(chart.dim());
      worst = std::max(worst, max_abs(flat_dual(chart, sharp_dual(chart, v, x), x) - v));
      worst = std::max(worst, max_abs(sharp_dual(chart, flat_dual(chart, alpha, x), x) - alpha));
    }
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("perturbed_reeb") {
  const ContactChart chart = models::darboux(1);
  SUBCASE("constant f") {
    const double c = 3.0;
    const auto pert = PerturbationData::from_differential(
        [c](const Vec&) { return c; }, [](const Vec& x) -> Vec { return Vec::Zero(x.size()); });
    const Vec x = vec3(0.1, 0.2, 0.3);
    CHECK(max_abs(perturbed_reeb(chart, pert, x) - reeb_field(chart, x) / c) < 1e-14);
  }
  SUBCASE("f = e^z") {
    const auto pert = PerturbationData::from_differential(
        [](const Vec& x) { return std::exp(x(2)); },
        [](const Vec& x) -> Vec { return std::exp(x(2)) * Vec::Unit(3, 2); });
    CounterRng rng(18);
    for (int s = 0; s < 20; ++s) {
      const Vec x = rng.uniform_vec(3, -1.0, 1.0);
      const Vec expected = std::exp(-x(2)) * vec3(0.0, -x(1), 1.0);
      CHECK(max_abs(perturbed_reeb(chart, pert, x) - expected) < 1e-12);
      CHECK(max_abs(reeb_field(models::exp_scaled_darboux(), x) - expected) < 1e-10);
      CHECK(pert.dg_consistency(x) < 1e-8);
    }
  }
  SUBCASE("random polynomial f against the direct solve of fλ") {
    CounterRng rng(19);
    for (int n = 1; n <= 2; ++n) {
      const ContactChart base = models::darboux(n);
      for (int s = 0; s < 50; ++s) {
        const auto pert = random_polynomial_perturbation(rng, base.dim());
        const ContactChart scaled = conformal_chart(base, pert);
        const Vec x = rng.uniform_vec(base.dim(), -1.0, 1.0);
        const Vec formula = perturbed_reeb(base, pert, x);
        CHECK(max_abs(formula - reeb_field(scaled, x)) < 1e-8);
        CHECK(reeb_defect(scaled, formula, x) < 1e-8);
        CHECK(pert.dg_consistency(x) < 1e-8);
      }
    }
  }
}

TEST_CASE("perturbed_projection") {
  const ContactChart chart = models::darboux(1);
  const auto unit = PerturbationData::from_differential(
      [](const Vec&) { return 1.0; }, [](const Vec& x) -> Vec { return Vec::Zero(x.size()); });
  const auto expz = PerturbationData::from_differential(
      [](const Vec& x) { return std::exp(x(2)); },
      [](const Vec& x) -> Vec { return std::exp(x(2)) * Vec::Unit(3, 2); });
  const Vec x = vec3(0.5, -0.8, 0.25);

  const Vec z = vec3(0.3, 1.0, -0.7);
  CHECK(max_abs(perturbed_projection(chart, unit, z, x) - project_xi(chart, z, x)) < 1e-14);

  const Vec in_xi = vec3(1.0, 0.4, x(1));  // λ0 = z-comp − p·q-comp = 0
  CHECK(max_abs(perturbed_projection(chart, expz, in_xi, x) - in_xi) < 1e-14);

  // Z = ∂z: π_λ(Z) = 0, λ(Z) = 1, X^π_{dz} = −p ∂p
  CHECK(max_abs(perturbed_projection(chart, expz, Vec::Unit(3, 2), x) - vec3(0.0, x(1), 0.0)) <
        1e-14);

  CounterRng rng(20);
  for (int s = 0; s < 50; ++s) {
    const auto pert = random_polynomial_perturbation(rng, 3);
    const ContactChart scaled = conformal_chart(chart, pert);
    const Vec y = rng.uniform_vec(3, -1.0, 1.0);
    const Vec w = rng.normal_vec(3);
    const Vec direct = w - scaled.lambda(y).dot(w) * reeb_field(scaled, y);
    CHECK(max_abs(perturbed_projection(chart, pert, w, y) - direct) < 1e-8);
  }
}

TEST_CASE("triad_gradient") {
  const ContactChart chart = models::darboux(1);
  const MatrixFn j = [&chart](const Vec& x) { return canonical_triad_J(chart, x); };
  CounterRng rng(21);

  SUBCASE("constant h") {
    const Vec x = rng.uniform_vec(3, -1.0, 1.0);
    CHECK(max_abs(triad_gradient(chart, j, [](const Vec&) { return 4.0; }, x)) < 1e-10);
  }
  SUBCASE("h = z satisfies g(grad, v) = dh(v)") {
    const ScalarFn h = [](const Vec& x) { return x(2); };
    for (int s = 0; s < 10; ++s) {
      const Vec x = rng.uniform_vec(3, -2.0, 2.0);
      const Vec grad = triad_gradient(chart, j, h, x);
      const Mat g = triad_metric(chart, j(x), x);
      for (int k = 0; k < 50; ++k) {
        const Vec v = rng.normal_vec(3);
        CHECK(std::abs(grad.dot(g * v) - v(2)) < 1e-8);
      }
    }
  }
  SUBCASE("adding a constant does not change the gradient") {
    const ScalarFn h = [](const Vec& x) { return std::sin(x(0)) * x(1) + x(2) * x(2); };
    const ScalarFn hc = [&h](const Vec& x) { return h(x) + 7.5; };
    const Vec x = rng.uniform_vec(3, -1.0, 1.0);
    CHECK(max_abs(triad_gradient(chart, j, h, x) - triad_gradient(chart, j, hc, x)) < 1e-9);
  }
  SUBCASE("agrees with J·Y_dh + X[h]X") {
    const ContactChart e = models::exp_scaled_darboux();
    for (int s = 0; s < 20; ++s) {
      const Vec x = rng.uniform_vec(3, -1.0, 1.0);
      const Vec dh = rng.normal_vec(3);
      const Mat jx = canonical_triad_J(e, x);
      const Vec reeb = reeb_field(e, x);
      const Vec second = jx * xi_dual(e, dh, x) + dh.dot(reeb) * reeb;
      CHECK(max_abs(triad_gradient(e, jx, dh, x) - second) < 1e-9);
    }
  }
  SUBCASE("incompatible J is rejected") {
    const Vec x = rng.uniform_vec(3, -1.0, 1.0);
    CHECK_THROWS_AS(triad_gradient(chart, Mat(Mat::Identity(3, 3)), Vec::Unit(3, 2), x),
                    IncompatibleJ);
    // J² = −Π but the orientation is reversed: dλ(·, J·) is negative definite on ξ
    const Mat reversed = -canonical_triad_J(chart, x);
    CHECK_THROWS_AS(triad_gradient(chart, reversed, Vec::Unit(3, 2), x), IncompatibleJ);
  }
}
