#pragma once

// Fourier-Galerkin discretization of the asymptotic operator
//
//   B = −J₀ d/dt − S(t)
//
// on periodic sections [0, T) → ℝ^{2k}, with S = −J₀·DᵛX symmetric. J₀
// defaults to blocks [[0, −1], [1, 0]]. The basis is the orthonormal real
// Fourier basis 1/√T, √(2/T) cos(2πjt/T), √(2/T) sin(2πjt/T), j = 1..N, one
// copy per fiber component (component-major ordering).

#include <cstdint>
#include <functional>
#include <vector>

#include "contactlab/contact_core.hpp"
#include "contactlab/reeb_dynamics.hpp"

namespace contactlab {

using TimeMatrixFn = std::function<Mat(double)>;

/// Fiberwise linearization DᵛX along the orbit, parametrized by t ∈ [0, T).
struct HessianData {
  int rank = 0;
  TimeMatrixFn dvx;
  Mat j0;  // empty → standard blocks

  /// Builds DᵛX = J₀·S from a symmetric S(t).
  static HessianData from_symmetric(int rank, TimeMatrixFn s, Mat j0 = {});

  Mat complex_structure() const;
  /// S(t) = −J₀·DᵛX(t).
  Mat symmetric_part(double t) const;
};

struct SpectralOptions {
  double kernel_tol = 1e-8;
  double symmetry_tol = 1e-10;
};

struct SpectralOperator {
  int rank = 0;
  int n_modes = 0;
  double period = 1.0;
  Mat j0;
  std::vector<double> nodes;   // quadrature nodes in [0, T)
  std::vector<Mat> s_samples;  // S at the nodes
  Mat matrix;                  // symmetric, rank·(2N+1) square
  double asymmetry = 0.0;      // before symmetrization

  int basis_size() const { return 2 * n_modes + 1; }
  /// Synthesizes the section at time t from Galerkin coefficients.
  Vec evaluate(const Vec& coeffs, double t) const;
  /// Galerkin coefficients of a sampled section (uniform grid of n points).
  Vec project(const std::vector<Vec>& samples) const;
};

/// Throws AsymmetricHessian if J₀·DᵛX is not symmetric within
/// opts.symmetry_tol at the quadrature nodes.
SpectralOperator build_operator(double period, const HessianData& hess, int n_modes,
                                const SpectralOptions& opts = {});
SpectralOperator build_operator(const ReebOrbit& orbit, const HessianData& hess, int n_modes,
                                const SpectralOptions& opts = {});

struct Spectrum {
  Vec eigenvalues;   // ascending
  Mat eigenvectors;  // columns, orthonormal
  double gap = 0.0;  // min |λ| over |λ| > kernel_tol
  int kernel_dim = 0;
  int first_nonzero = -1;  // index of an eigenvalue realizing the gap
  double kernel_tol = 1e-8;
};

Spectrum spectrum(const SpectralOperator& op, const SpectralOptions& opts = {});

struct GapReport {
  int trials = 0;
  int violations = 0;
  double min_quotient = 0.0;   // min ‖Bs‖² / ‖s‖²
  double delta_sq = 0.0;
  double extremal_error = 0.0;  // |quotient − δ²| at the eigenvector for the gap
};

/// Rayleigh quotients ‖Bs‖²/‖s‖² of random sections projected off the
/// kernel, compared against δ² − slack.
GapReport gap_inequality_check(const SpectralOperator& op, const Spectrum& spec, int n_trials,
                               std::uint64_t seed, double slack = 1e-8);

/// Samples of DΥ(z)(Y) = Ẏ − T·DX_{fλ}(z) Y along a closed orbit with time
/// normalized to [0, 1), in the trivial connection of the chart.
struct LinearizedOperator {
  double period = 0.0;
  std::vector<Vec> points;
  std::vector<Mat> a;  // T·DX_{fλ}(z(t_j))

  /// Applies DΥ to a sampled periodic field, with Ẏ from the derivative of
  /// its trigonometric interpolant.
  std::vector<Vec> apply(const std::vector<Vec>& y) const;
};

/// Throws HypothesisViolated unless |f − 1| and |dg| are within 1e−8 along
/// the orbit.
LinearizedOperator linearized_orbit_operator(const ContactChart& chart,
                                             const PerturbationData& pert,
                                             const ReebOrbit& orbit);

}  // namespace contactlab
