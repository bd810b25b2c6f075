#pragma once

// Model contact charts with closed-form data used throughout the tests and
// scenarios.

#include <vector>

#include "contactlab/contact_core.hpp"
#include "contactlab/rng.hpp"

namespace contactlab::models {

/// c·(dz − Σ p_i dq_i) on ℝ^{2n+1}, coordinates (q_1..q_n, p_1..p_n, z).
ContactChart darboux(int n, double scale = 1.0);

/// e^z (dz − p dq) on ℝ³, coordinates (q, p, z).
ContactChart exp_scaled_darboux();

/// dt₁ + p dt₂ on T² × ℝ, coordinates (t₁, t₂, p), t₁ and t₂ of period 1.
ContactChart torus();

/// Chart of the ellipsoid around the orbit on the axis of weight w0:
/// λ = (1/w0)(1 − ½ Σ w_j r_j²) dθ + ½ Σ (x_j dy_j − y_j dx_j),
/// coordinates (θ, x_1, y_1, ..., x_n, y_n), θ of period 2π.
/// The Reeb flow is θ ↦ θ + w0 t and a rotation of (x_j, y_j) by w_j t.
ContactChart weighted_ellipsoid(double w0, const std::vector<double>& w);

/// Closed-form Reeb flow of `weighted_ellipsoid`.
Vec ellipsoid_flow(double w0, const std::vector<double>& w, const Vec& x, double t);

/// Closed-form linearized flow of `weighted_ellipsoid` (independent of x).
Mat ellipsoid_flow_derivative(double w0, const std::vector<double>& w, double t);

/// Darboux-chart index helpers.
inline int q_index(int /*n*/, int i) { return i; }
inline int p_index(int n, int i) { return n + i; }
inline int z_index(int n) { return 2 * n; }

/// Closed-form ♭ of the constant-coefficient form Σ a_i dq_i + Σ b_i dp_i + a₀ dz
/// for the Darboux chart `darboux(n)` at x.
Vec darboux_flat_formula(int n, double alpha0, const Vec& a, const Vec& b, const Vec& x);

/// f = 0.5 + p(x)² with p a random quadratic; f > 0 everywhere.
PerturbationData random_polynomial_perturbation(CounterRng& rng, int dim);

}  // namespace contactlab::models
