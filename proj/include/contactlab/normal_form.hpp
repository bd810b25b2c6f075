#pragma once

// Canonical thickening of a Morse-Bott contact set-up (Q, θ, H):
//
//   λ_F = θ + Θ_G + ½ R ⌋ Ω̃   on F = T*𝒩 ⊕ E,
//
// in flat model charts with coordinates (q, μ, e): q on Q, μ ∈ ℝ^m the T*𝒩
// fiber, e ∈ ℝ^{2k} the E fiber. Θ_G(ξ) = μ(p_{T𝒩;G} dπ ξ) and
// R ⌋ Ω̃ = Ω(e, de). Also Q-adapted CR-almost complex structures on the model
// splitting ℝX ⊕ G ⊕ (T𝒩 ⊕ T*𝒩) ⊕ E.

#include <string>
#include <vector>

#include "contactlab/contact_core.hpp"

namespace contactlab {

struct MorseBottSetup {
  std::string name;
  int m = 0;  // dim T𝒩
  int g = 0;  // dim G = 2g
  VectorFn theta;
  VectorFn x_theta;
  /// dim Q × m basis of H = T𝒩.
  MatrixFn h_basis;
  /// dim Q × 2g basis of the complement G.
  MatrixFn g_basis;
  Vec periods;  // periods of the Q coordinates (0 = not periodic)

  int dim_q() const { return 1 + m + 2 * g; }
};

struct SetupDiagnostics {
  double theta_defect = 0.0;        // max |θ(X_θ) − 1|
  int dtheta_rank = 0;              // numerical rank of dθ (must be 2g everywhere)
  double rank_gap_low = 0.0;        // smallest of the top 2g singular values
  double rank_gap_high = 0.0;       // largest of the remaining singular values
  double kernel_residual = 0.0;     // max |dθ(v, ·)| for v ∈ {X_θ} ∪ H
  double h_in_xi = 0.0;             // max |θ(h)|
  bool valid = false;
};

/// Checks θ(X_θ) = 1, constant rank 2g of dθ and ker dθ = ℝX_θ ⊕ H at the
/// given points of Q.
SetupDiagnostics validate_setup(const MorseBottSetup& setup, const std::vector<Vec>& points);

/// S¹ with θ = dθ (m = g = 0).
MorseBottSetup circle_setup();
/// T² with θ = dt₁ and 𝒩 spanned by ∂t₂ (m = 1, g = 0).
MorseBottSetup torus_setup();
/// Q = S¹ × T^m × ℝ^{2g}, θ = dt₀ + ½ Σ (a_j db_j − b_j da_j), H = span ∂s_i,
/// G spanned by ∂a_j + ½ b_j ∂t₀ and ∂b_j − ½ a_j ∂t₀.
MorseBottSetup mixed_setup(int m, int g);

struct TubeOptions {
  double requested_radius = 0.5;
  double search_radius = 2.0;
  int grid_per_dim = 16;
  int max_grid_points = 4096;
  int bisection_steps = 30;
};

/// Largest r ≤ search_radius such that at every grid point with fiber norm
/// ≤ r over each base point, the contact volume keeps the sign of its base
/// value and at least half its magnitude. Throws NotContact if that radius is
/// below opts.requested_radius.
double verify_tube(const ContactChart& chart, const std::vector<Vec>& base_points,
                   const std::vector<int>& fiber_indices, const TubeOptions& opts = {});

class ThickeningChart {
 public:
  ThickeningChart(MorseBottSetup setup, Mat omega);

  const MorseBottSetup& setup() const { return setup_; }
  const ContactChart& chart() const { return chart_; }
  const Mat& omega() const { return omega_; }
  int k() const { return static_cast<int>(omega_.rows()) / 2; }
  int dim() const { return chart_.dim(); }

  int q_offset() const { return 0; }
  int mu_offset() const { return setup_.dim_q(); }
  int e_offset() const { return setup_.dim_q() + setup_.m; }

  Vec zero_section_point(const Vec& q) const;
  std::vector<int> fiber_indices() const;

  /// Rows of the projection p_{T𝒩;G} : TQ → T𝒩 in the H basis (m × dim Q).
  Mat tn_projector(const Vec& q) const;

  Vec theta_pullback(const Vec& x) const;  // π_F*θ
  Vec theta_g(const Vec& x) const;         // π*Θ_G
  Vec radial_form(const Vec& x) const;     // π*(R ⌋ Ω̃)
  Vec radial_field(const Vec& x) const;    // R
  Mat omega_tilde(const Vec& x) const;     // Ω̃ as a 2-form on F

  /// Horizontal lift of X_θ(q) to the zero section.
  Vec lifted_x_theta(const Vec& q) const;

  /// max |dλ_F − (π*dθ + π*dΘ_G + Ω̃)| with each side by finite differences.
  double dlambda_decomposition_error(const Vec& x) const;

  double tube_radius = 0.0;

 private:
  MorseBottSetup setup_;
  Mat omega_;
  ContactChart chart_;
};

/// Assembles λ_F and verifies it is contact on the requested tube.
/// `base_points` are Q points used for the tube check (defaults to q = 0).
ThickeningChart build_thickening(const MorseBottSetup& setup, const Mat& omega,
                                 const TubeOptions& opts = {},
                                 std::vector<Vec> base_points = {});

/// Reeb field of λ_F at the zero-section point over q.
Vec reeb_of_thickening(const ThickeningChart& tc, const Vec& q);

struct ContactSplitting {
  Mat v_basis;  // lifts of ker θ
  Mat w_basis;  // corrected vertical vectors
  int rank = 0;
  double annihilation = 0.0;  // max |λ_F(v)| over both bases
};

ContactSplitting split_contact_distribution(const ThickeningChart& tc, const Vec& x);

struct RadialReport {
  double scaling_error = 0.0;  // max |R_c*Ω̃ − c²Ω̃|
  double cartan_error = 0.0;   // max |d(R ⌋ Ω̃) − 2Ω̃|
};

RadialReport radial_identities(const ThickeningChart& tc, double c, const std::vector<Vec>& grid);

/// The splitting ℝX ⊕ G ⊕ T𝒩 ⊕ T*𝒩 ⊕ E of T_qM along the zero section, with
/// dλ written in that basis. Endomorphisms passed to make_adapted_J and
/// check_adapted act on coordinates in this basis.
struct ModelSplitting {
  int m = 0;
  int g = 0;
  int k = 0;
  Mat basis;  // columns in chart coordinates (identity for abstract models)
  Mat omega;  // dλ(b_i, b_j)

  int dim() const { return 1 + 2 * g + 2 * m + 2 * k; }
  int dim_q() const { return 1 + 2 * g + m; }
  int g_offset() const { return 1; }
  int n_offset() const { return 1 + 2 * g; }
  int nstar_offset() const { return 1 + 2 * g + m; }
  int e_offset() const { return 1 + 2 * g + 2 * m; }
};

ModelSplitting model_splitting(const ThickeningChart& tc, const Vec& q);

/// Abstract model with given ω_G and Ω and the canonical pairing
/// dλ(∂s_i, ∂μ_j) = −δ_ij on T𝒩 ⊕ T*𝒩.
ModelSplitting abstract_splitting(int m, const Mat& omega_g, const Mat& omega_e);

struct AdaptedJ {
  Mat j_g;
  Mat j_e;
  Mat b;
  Mat j;  // assembled endomorphism in model coordinates
};

/// Assembles the block structure J(X) = 0, J|G = J_G (+ B into E), the
/// canonical compatible pairing on T𝒩 ⊕ T*𝒩, J|E = J_E. Throws BadBlocks
/// naming the failed precondition.
AdaptedJ make_adapted_J(const ModelSplitting& split, const Mat& j_g, const Mat& j_e, const Mat& b);

struct AdaptedCheck {
  bool adapted = false;
  bool containment = false;   // J(TQ) ⊂ TQ + J T𝒩
  bool splitting = false;     // TQ = (TQ ∩ JTQ) ⊕ T𝓕
  int containment_rank = 0;   // rank [TQ | J T𝒩 | J TQ]
  int expected_rank = 0;      // dim Q + m
  int intersection_dim = 0;   // dim (TQ ∩ JTQ)
  double square_defect = 0.0; // max |J² + Π|
};

AdaptedCheck check_adapted(const ModelSplitting& split, const Mat& j);

/// A dλ-compatible J on the model: the canonical compatible J of ω|ξ
/// conjugated by the Cayley transform of ω|ξ⁻¹ S, which is symplectic for
/// symmetric S (2n × 2n, ξ coordinates). S = 0 gives the block-canonical J.
Mat compatible_model_J(const ModelSplitting& split, const Mat& s);

/// Null space basis of B ↦ B·J_G as a list of 2k × 2g matrices.
std::vector<Mat> coupling_null_space(const Mat& j_g, int rank_e);

}  // namespace contactlab
