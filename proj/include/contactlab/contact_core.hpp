#pragma once

// Chart-level contact algebra: Reeb fields, ξ-projections, the λ-dual
// isomorphism, identities for conformally rescaled forms fλ, and gradients
// with respect to the triad metric dλ(·, J·) + λ⊗λ.
//
// Conventions. A chart has coordinates x ∈ ℝ^{2n+1}. One-forms are coefficient
// vectors α_i, two-forms are antisymmetric matrices with ω(u, v) = uᵀ ω v, and
// the exterior derivative of α is (dα)_{ij} = ∂_i α_j − ∂_j α_i.

#include <functional>
#include <string>

#include "contactlab/linalg.hpp"

namespace contactlab {

class ContactChart {
 public:
  using DomainFn = std::function<bool(const Vec&)>;

  /// `dlambda` may be empty, in which case dλ is taken by fourth-order
  /// centered differences of the coefficients with step kFormStep.
  /// `periods(i) > 0` marks coordinate i as periodic with that period.
  ContactChart(std::string name, int n, VectorFn lambda, MatrixFn dlambda = {},
               Vec periods = {}, DomainFn domain = {});

  const std::string& name() const { return name_; }
  int n() const { return n_; }
  int dim() const { return 2 * n_ + 1; }

  Vec lambda(const Vec& x) const { return lambda_(x); }
  Mat dlambda(const Vec& x) const;
  bool has_analytic_dlambda() const { return static_cast<bool>(dlambda_); }

  const VectorFn& lambda_fn() const { return lambda_; }

  bool in_domain(const Vec& x) const { return !domain_ || domain_(x); }
  const Vec& periods() const { return periods_; }

  /// to − from with periodic coordinates wrapped to the nearest image.
  Vec displacement(const Vec& from, const Vec& to) const;

  /// Pfaffian of the augmented form [[0, λᵀ], [−λ, dλ]]; proportional to the
  /// coefficient of λ ∧ (dλ)^n on the coordinate frame.
  double contact_volume(const Vec& x) const;

 private:
  std::string name_;
  int n_;
  VectorFn lambda_;
  MatrixFn dlambda_;
  Vec periods_;
  DomainFn domain_;
};

/// f > 0 together with the analytic differential of g = log f.
struct PerturbationData {
  ScalarFn f;
  VectorFn dg;

  /// Builds the data from f and its analytic differential df (dg = df / f).
  static PerturbationData from_differential(ScalarFn f, VectorFn df);

  double g(const Vec& x) const;

  /// max |dg − ∇(log f)| against fourth-order finite differences.
  double dg_consistency(const Vec& x) const;
};

struct ReebSolve {
  Vec field;
  double residual = 0.0;
  double condition = 0.0;
};

/// Solves λ(v) = 1, v ⌋ dλ = 0 as a (2n+2)×(2n+1) least-squares system.
/// Throws SingularChart if the stacked system is rank deficient.
ReebSolve solve_reeb(const ContactChart& chart, const Vec& x);
Vec reeb_field(const ContactChart& chart, const Vec& x);

/// Z − λ(Z) X_λ.
Vec project_xi(const ContactChart& chart, const Vec& z, const Vec& x);

/// Solves α = v ⌋ dλ + λ(v) λ for v = ♭_λ(α).
Vec flat_dual(const ContactChart& chart, const Vec& alpha, const Vec& x,
              double* residual = nullptr);

/// ♯_λ(X) = X ⌋ dλ + λ(X) λ.
Vec sharp_dual(const ContactChart& chart, const Vec& v, const Vec& x);

/// Y_α = π_λ(♭_λ(α)), the ξ-part of the dual vector field.
Vec xi_dual(const ContactChart& chart, const Vec& alpha, const Vec& x);

/// X_{fλ} = (1/f)(X_λ + X_{dg}^{π_λ}) with g = log f.
Vec perturbed_reeb(const ContactChart& chart, const PerturbationData& pert,
                   const Vec& x);

/// π_{fλ}(Z) = π_λ(Z) − λ(Z) X_{dg}^{π_λ}.
Vec perturbed_projection(const ContactChart& chart, const PerturbationData& pert,
                         const Vec& z, const Vec& x);

/// The chart of fλ, with d(fλ) = f·(dg ∧ λ + dλ). Used as an independent
/// oracle for the closed-form perturbation identities.
ContactChart conformal_chart(const ContactChart& chart, const PerturbationData& pert);

/// Orthonormal frame (columns) of ξ_x: Gram-Schmidt of π_λ(e_i) in
/// coordinate order, dropping vectors that collapse.
Mat xi_frame(const ContactChart& chart, const Vec& x);

/// The unique J with J² = −I and ω(·, J·) = the positive square root of −ω².
/// `omega` is an antisymmetric nondegenerate matrix.
Mat compatible_complex_structure(const Mat& omega);

/// A CR-almost complex structure on the chart compatible with dλ|ξ, built
/// from `xi_frame`. J X_λ = 0 and J² = −Π.
Mat canonical_triad_J(const ContactChart& chart, const Vec& x);

/// Gradient of h for the triad metric g = dλ(·, J·) + λ ⊗ λ. `dh` is the
/// differential of h at x. Throws IncompatibleJ when J² ≠ −Π or g is not
/// symmetric positive definite.
Vec triad_gradient(const ContactChart& chart, const Mat& j, const Vec& dh,
                   const Vec& x);
Vec triad_gradient(const ContactChart& chart, const MatrixFn& j, const ScalarFn& h,
                   const Vec& x);

/// Triad metric matrix G with g(u, v) = uᵀ G v.
Mat triad_metric(const ContactChart& chart, const Mat& j, const Vec& x);

}  // namespace contactlab
