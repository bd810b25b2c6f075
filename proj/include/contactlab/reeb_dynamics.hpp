#pragma once

// Reeb flows, closed orbits by shooting, linearized return maps on ξ and
// their classification, and continuation across Morse-Bott families.

#include <string>
#include <variant>
#include <vector>

#include "contactlab/contact_core.hpp"

namespace contactlab {

struct IntegratorOptions {
  enum class Method { kRK45, kRK4 };
  Method method = Method::kRK45;
  double rtol = 1e-10;
  double atol = 1e-12;
  /// Steps over the whole interval for the fixed-step RK4 integrator.
  int rk4_steps = 2000;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> points;
  /// Largest Reeb-solve residual seen at any right-hand-side evaluation.
  double max_reeb_residual = 0.0;
  /// max |λ(ẋ) − 1| over the returned samples.
  double max_action_defect = 0.0;
};

/// Integrates ẋ = X_λ(x) from x0 over [0, t] and returns steps + 1 uniformly
/// spaced samples. Throws LeftChartDomain or SingularChart.
Trajectory flow(const ContactChart& chart, const Vec& x0, double t, int steps,
                const IntegratorOptions& opts = {});

/// Endpoint φ^t(x0).
Vec flow_point(const ContactChart& chart, const Vec& x0, double t,
               const IntegratorOptions& opts = {});

struct VariationalFlow {
  Vec end;
  Mat monodromy;  // dφ^t(x0) in chart coordinates
};

/// Integrates the flow together with its variational equation Φ̇ = DX_λ Φ.
VariationalFlow flow_with_derivative(const ContactChart& chart, const Vec& x0, double t,
                                     const IntegratorOptions& opts = {});

struct ReebOrbit {
  double period = 0.0;
  Vec base_point;
  /// z(t_j) for t_j = j / samples.size(), j = 0 .. samples.size() − 1.
  std::vector<Vec> samples;
  /// Orthonormal frame of ξ at the base point (columns).
  Mat xi_frame;
  /// Whole periods per coordinate travelled by the orbit in one period.
  Vec winding;
  double closure_residual = 0.0;
  int iterations = 0;
};

struct ShootingOptions {
  int max_iterations = 30;
  double newton_tol = 1e-11;
  double tol_orbit = 1e-8;
  int n_samples = 256;
  /// When set, the orbit must close in the universal cover with
  /// φ^T(x) − x = winding·periods. When empty, periodic coordinates close
  /// modulo their period.
  Vec winding;
  /// Extra affine constraints ⟨x − point, direction⟩ = 0.
  std::vector<std::pair<Vec, Vec>> constraints;
  IntegratorOptions integrator;
};

/// Shooting Newton on (x, T) over the hyperplane through the guess orthogonal
/// to X_λ(guess). Steps are minimum-norm least-squares solutions, so inside a
/// Morse-Bott family the iteration returns the orbit through the converged
/// point. Throws NoConvergence.
ReebOrbit find_closed_orbit(const ContactChart& chart, const Vec& guess, double period_guess,
                            const ShootingOptions& opts = {});

/// ∫_γ λ computed from the orbit samples (periodic fourth-order differences
/// of the unwrapped loop, trapezoid quadrature).
double orbit_action(const ContactChart& chart, const ReebOrbit& orbit);

struct ReturnMap {
  Mat matrix;  // Ψ on ξ_p in the orbit's frame
  CVec eigenvalues;
  int unit_eigen_dim = 0;
  Mat omega;  // dλ|ξ in the same frame
  double symplectic_defect = 0.0;
};

/// Linearized Poincaré return map dφ^T(p)|ξ_p. `tol` sets unit_eigen_dim.
ReturnMap return_map(const ContactChart& chart, const ReebOrbit& orbit,
                     const IntegratorOptions& opts = {}, double tol = 1e-6);

struct Nondegenerate {};
struct MorseBottCandidate {
  int multiplicity;
};
using OrbitClass = std::variant<Nondegenerate, MorseBottCandidate>;

/// Nondegenerate iff no eigenvalue lies within tol of 1; otherwise the
/// number of eigenvalues within tol of 1.
OrbitClass classify_orbit(const ReturnMap& rm, double tol = 1e-6);
OrbitClass classify_matrix(const Mat& psi, double tol = 1e-6);

struct FamilySample {
  int direction = 0;
  int index = 0;
  double offset = 0.0;
  bool converged = false;
  double period = 0.0;
  double closure_residual = 0.0;
  Vec point;
  std::string failure;
};

struct FamilyReport {
  double seed_period = 0.0;
  std::vector<FamilySample> samples;
  /// max |T_i − T_0| over converged samples.
  double max_period_deviation = 0.0;
  int converged = 0;
};

/// Continues the seed orbit along each direction d at offsets k·step,
/// k = 1..n_samples, holding the component along every scan direction fixed.
/// Failures are recorded per sample. Samples run in parallel.
FamilyReport orbit_family_scan(const ContactChart& chart, const ReebOrbit& seed,
                               const std::vector<Vec>& directions, int n_samples, double step,
                               const ShootingOptions& opts = {});

}  // namespace contactlab
