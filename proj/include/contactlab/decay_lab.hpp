#pragma once

// Three-interval estimates, the model cylinder evolution
//
//   ∂_τ ζ + B ζ = L(τ, t),   L = e^{−δ₀τ} ℓ(t),
//
// on [0, R] × S¹ with B a Galerkin SpectralOperator, decay-rate fits, the
// center of mass of loops near a flat Morse-Bott torus, and the action /
// charge / π-energy functionals of maps of cylinders.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "contactlab/contact_core.hpp"
#include "contactlab/spectral.hpp"

namespace contactlab {

/// ξ = (1 + √(1 − 4γ²)) / (2γ); throws OutOfRange unless 0 < γ < ½.
double growth_factor(double gamma);
/// γ(c) = 1 / (e^c + e^{−c}); throws OutOfRange unless c > 0.
double gamma_of_c(double c);

struct ThreeIntervalResult {
  bool hypothesis_holds = false;
  std::vector<int> violations;  // interior k with x_k > γ(x_{k−1} + x_{k+1})
  double xi = 0.0;
  Vec bounds;                   // x_0 ξ^{−k} + x_N ξ^{−(N−k)}, empty if hypothesis fails
  bool bound_holds = false;
  std::vector<int> bound_failures;
};

/// Checks the hypothesis (with slack) and, when it holds, the bound.
/// Throws OutOfRange for γ ∉ (0, ½) or negative entries.
ThreeIntervalResult three_interval_bound(const std::vector<double>& x, double gamma,
                                         double slack = 1e-12);

struct CylinderGrid {
  double R = 20.0;
  int n_tau = 512;  // slices τ_i = i R / (n_tau − 1)
  int n_t = 128;    // t_j = j T / n_t
};

/// L = e^{−δ₀τ} ℓ with ℓ given by Galerkin coefficients (empty: L = 0).
struct Forcing {
  double delta0 = 1.0;
  Vec profile;
};

struct CylinderField {
  double R = 0.0;
  double period = 1.0;
  int rank = 0;
  int n_modes = 0;
  std::vector<double> taus;
  std::vector<Vec> coeffs;   // Galerkin coefficients per slice
  std::vector<Mat> slices;   // rank × n_t samples per slice
  std::vector<double> slice_norms;

  /// ‖ζ(τ)‖_{L²(S¹)} by the periodic trapezoid rule.
  static double slice_norm(const Mat& slice, double period);
};

/// Eigen-expansion solve for τ-independent B. Each mode a_j solves
/// a' + λ_j a = e^{−δ₀τ} ℓ_j exactly; modes with λ_j < −kernel_tol take
/// a_j(R) = 0 instead of the initial value. Throws ResolutionTooCoarse if
/// n_t < 2N + 1 and ModeMismatch on coefficient sizes.
CylinderField solve_cylinder(const SpectralOperator& op, const Forcing& forcing, const Vec& zeta0,
                             const CylinderGrid& grid, const SpectralOptions& opts = {});

/// Crank-Nicolson march of ∂_τ ζ + (B + P(τ)) ζ = L with P(τ) a Galerkin
/// matrix (may be empty). Marches forward only, so B + P(0) must be
/// nonnegative; throws HypothesisViolated otherwise.
CylinderField solve_cylinder_cn(const SpectralOperator& op, const std::function<Mat(double)>& p,
                                const Forcing& forcing, const Vec& zeta0, const CylinderGrid& grid);

struct DecayOptions {
  double floor = 1e-12;
  int min_points = 10;
  /// Falls back to τ ≥ R/2 when the norms never drop below 0.1·initial.
  bool tail_fallback = true;
};

struct DecayFit {
  double delta_hat = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double window_begin = 0.0;
  double window_end = 0.0;
  int count = 0;
  bool tail_window = false;
};

/// Least-squares slope of −log‖ζ(τ)‖ over the slices with norm in
/// (floor, 0.1·initial). Throws InsufficientDecay if fewer than
/// min_points slices qualify.
DecayFit decay_rate(const std::vector<double>& taus, const std::vector<double>& norms,
                    const DecayOptions& opts = {});
DecayFit decay_rate(const CylinderField& field, const DecayOptions& opts = {});

/// M = T^d × ℝ^r with the Morse-Bott torus Q = T^d × {0}, θ a constant
/// covector on T^d and Reeb flow the translation along X (θ(X) = 1).
struct FlatTorusModel {
  Vec periods;  // d
  Vec theta;    // d
  Vec x;        // d
  int normal_dim = 0;
  double tube_radius = 0.25;

  int dim_q() const { return static_cast<int>(periods.size()); }
  int dim() const { return dim_q() + normal_dim; }
  /// E(a, b) = exp_a^{−1}(b) on T^d: the wrapped difference.
  Vec log(const Vec& a, const Vec& b) const;
};

/// T² × ℝ with θ = dt₁, X = ∂t₁, periods 1: the torus model chart's locus.
FlatTorusModel flat_torus_model();

struct CenterOfMassOptions {
  int max_iterations = 12;
  double tol = 1e-9;
};

struct CenterOfMassResult {
  Vec m;                          // point of Q
  Vec h;                          // h(t_j), t_j = j / n
  double mean_residual = 0.0;     // |∫ E(m, φ^{−Th(t)} γ(t)) dt|
  double xi_residual = 0.0;       // max_t |θ(E(m, φ^{−Th(t)} γ(t)))|
  double tube_distance = 0.0;
  int iterations = 0;
  std::vector<double> history;
};

/// Gauss-Newton on (m, h) for ∫E(m, φ^{−Th}γ) dt = 0 and E ∈ ker θ, with
/// the normalization ∫(h − id) = 0. `loop` holds γ(t_j) ∈ M at t_j = j/n.
/// Throws OutsideTube if the C¹ distance of γ to the orbit family exceeds the
/// model's tube radius and NoConvergence if the residuals stay above tol.
CenterOfMassResult center_of_mass(const FlatTorusModel& model, const std::vector<Vec>& loop,
                                  double period, const CenterOfMassOptions& opts = {});

/// ∫₀¹ (dφ^{Tt})⁻¹ ζ(t) dt by the periodic trapezoid rule, ζ sampled at
/// t_j = j / n and flow_derivative(s) = dφ^s.
Vec mean_zero_check(const TimeMatrixFn& flow_derivative, const std::vector<Vec>& zeta,
                    double period);

struct ActionCharge {
  double action = 0.0;     // E^π + ∫_{τ=0} w*λ
  double charge = 0.0;     // ∫_{τ=0} w*λ ∘ j = −∫ λ(∂_τ w) dt
  double pi_energy = 0.0;  // ½ ∫ |π ∂_τ w|² + |π ∂_t w|²
};

/// `w[i][j]` = w(τ_i, t_j) with τ_i = i R / (n_τ − 1) and t_j = j / n_t.
/// `metric` (may be empty) gives the ξ metric; identity otherwise.
ActionCharge action_charge(const std::vector<std::vector<Vec>>& w, double R,
                           const ContactChart& chart, const MatrixFn& metric = {});

}  // namespace contactlab
