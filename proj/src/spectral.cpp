#include "contactlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "contactlab/errors.hpp"
#include "contactlab/rng.hpp"

namespace contactlab {

namespace {

using std::numbers::pi;

// Values of the real Fourier basis at time t.
Vec basis_values(int n_modes, double period, double t) {
  Vec v(2 * n_modes + 1);
  v(0) = 1.0 / std::sqrt(period);
  const double c = std::sqrt(2.0 / period);
  for (int j = 1; j <= n_modes; ++j) {
    const double w = 2.0 * pi * j * t / period;
    v(2 * j - 1) = c * std::cos(w);
    v(2 * j) = c * std::sin(w);
  }
  return v;
}

// d/dt in the real Fourier basis: ⟨φ_r, φ_c'⟩.
Mat derivative_matrix(int n_modes, double period) {
  const int m = 2 * n_modes + 1;
  Mat d = Mat::Zero(m, m);
  for (int j = 1; j <= n_modes; ++j) {
    const double w = 2.0 * pi * j / period;
    d(2 * j, 2 * j - 1) = -w;  // cos' = −w sin
    d(2 * j - 1, 2 * j) = w;   // sin' = w cos
  }
  return d;
}

}  // namespace

HessianData HessianData::from_symmetric(int rank, TimeMatrixFn s, Mat j0) {
  HessianData h;
  h.rank = rank;
  h.j0 = std::move(j0);
  const Mat j = h.complex_structure();
  h.dvx = [j, s = std::move(s)](double t) -> Mat { return j * s(t); };
  return h;
}

Mat HessianData::complex_structure() const {
  return j0.size() == 0 ? standard_complex_structure(rank) : j0;
}

Mat HessianData::symmetric_part(double t) const { return -complex_structure() * dvx(t); }

Vec SpectralOperator::evaluate(const Vec& coeffs, double t) const {
  const int m = basis_size();
  const Vec phi = basis_values(n_modes, period, t);
  Vec out(rank);
  for (int a = 0; a < rank; ++a) out(a) = coeffs.segment(a * m, m).dot(phi);
  return out;
}

Vec SpectralOperator::project(const std::vector<Vec>& samples) const {
  const int m = basis_size();
  const auto n = samples.size();
  Vec c = Vec::Zero(rank * m);
  const double w = period / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec phi = basis_values(n_modes, period, period * static_cast<double>(i) / n);
    for (int a = 0; a < rank; ++a) c.segment(a * m, m) += w * samples[i](a) * phi;
  }
  return c;
}

SpectralOperator build_operator(double period, const HessianData& hess, int n_modes,
                                const SpectralOptions& opts) {
  if (period <= 0.0) throw std::invalid_argument("period must be positive");
  if (n_modes < 0) throw std::invalid_argument("n_modes must be nonnegative");
  SpectralOperator op;
  op.rank = hess.rank;
  op.n_modes = n_modes;
  op.period = period;
  op.j0 = hess.complex_structure();
  const int k2 = op.rank;
  const int m = op.basis_size();

  // Quadrature with more than 4N nodes integrates φ_i S φ_j exactly for S
  // band-limited to 2N modes.
  const int nq = 4 * n_modes + 4;
  Mat phi(m, nq);
  for (int i = 0; i < nq; ++i) {
    const double t = period * i / nq;
    op.nodes.push_back(t);
    const Mat dvx = hess.dvx(t);
    const Mat sym = op.j0 * dvx;
    if ((sym - sym.transpose()).cwiseAbs().maxCoeff() > opts.symmetry_tol)
      throw AsymmetricHessian("J0·DᵛX is not symmetric at t = " + std::to_string(t));
    op.s_samples.push_back(-sym);
    phi.col(i) = basis_values(n_modes, period, t);
  }

  const Mat d = derivative_matrix(n_modes, period);
  op.matrix = Mat::Zero(k2 * m, k2 * m);
  const double w = period / nq;
  for (int a = 0; a < k2; ++a)
    for (int b = 0; b < k2; ++b) {
      Vec sab(nq);
      for (int i = 0; i < nq; ++i) sab(i) = op.s_samples[i](a, b);
      Mat block = -op.j0(a, b) * d;
      block.noalias() -= w * phi * sab.asDiagonal() * phi.transpose();
      op.matrix.block(a * m, b * m, m, m) = block;
    }
  op.asymmetry = (op.matrix - op.matrix.transpose()).cwiseAbs().maxCoeff();
  op.matrix = 0.5 * (op.matrix + op.matrix.transpose()).eval();
  return op;
}

SpectralOperator build_operator(const ReebOrbit& orbit, const HessianData& hess, int n_modes,
                                const SpectralOptions& opts) {
  return build_operator(orbit.period, hess, n_modes, opts);
}

Spectrum spectrum(const SpectralOperator& op, const SpectralOptions& opts) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(op.matrix);
  Spectrum s;
  s.eigenvalues = eig.eigenvalues();
  s.eigenvectors = eig.eigenvectors();
  s.kernel_tol = opts.kernel_tol;
  s.gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i) {
    const double a = std::abs(s.eigenvalues(i));
    if (a <= opts.kernel_tol) {
      ++s.kernel_dim;
    } else if (a < s.gap) {
      s.gap = a;
      s.first_nonzero = static_cast<int>(i);
    }
  }
  return s;
}

GapReport gap_inequality_check(const SpectralOperator& op, const Spectrum& spec, int n_trials,
                               std::uint64_t seed, double slack) {
  GapReport rep;
  rep.trials = n_trials;
  rep.delta_sq = spec.gap * spec.gap;
  rep.min_quotient = std::numeric_limits<double>::infinity();
  const auto dim = op.matrix.rows();

  std::vector<Eigen::Index> kernel;
  for (Eigen::Index i = 0; i < spec.eigenvalues.size(); ++i)
    if (std::abs(spec.eigenvalues(i)) <= spec.kernel_tol) kernel.push_back(i);

  auto quotient = [&](const Vec& s) { return (op.matrix * s).squaredNorm() / s.squaredNorm(); };

  CounterRng rng(seed, 0);
  for (int t = 0; t < n_trials; ++t) {
    Vec s = rng.normal_vec(static_cast<int>(dim));
    for (Eigen::Index i : kernel) {
      const auto v = spec.eigenvectors.col(i);
      s -= v.dot(s) * v;
    }
    const double q = quotient(s);
    rep.min_quotient = std::min(rep.min_quotient, q);
    if (q < rep.delta_sq - slack) ++rep.violations;
  }
  if (spec.first_nonzero >= 0)
    rep.extremal_error =
        std::abs(quotient(spec.eigenvectors.col(spec.first_nonzero)) - rep.delta_sq);
  return rep;
}

std::vector<Vec> LinearizedOperator::apply(const std::vector<Vec>& y) const {
  const int n = static_cast<int>(y.size());
  if (n != static_cast<int>(a.size())) throw ModeMismatch("section and operator sample counts differ");
  const int dim = static_cast<int>(y.front().size());
  // Derivative in normalized time of the trigonometric interpolant.
  std::vector<Vec> dy(n, Vec::Zero(dim));
  const int kmax = (n - 1) / 2;
  for (int k = 1; k <= kmax; ++k) {
    Vec ck = Vec::Zero(dim);
    Vec sk = Vec::Zero(dim);
    for (int j = 0; j < n; ++j) {
      const double w = 2.0 * pi * k * j / n;
      ck += std::cos(w) * y[j];
      sk += std::sin(w) * y[j];
    }
    ck *= 2.0 / n;
    sk *= 2.0 / n;
    for (int j = 0; j < n; ++j) {
      const double w = 2.0 * pi * k * j / n;
      dy[j] += 2.0 * pi * k * (-std::sin(w) * ck + std::cos(w) * sk);
    }
  }
  std::vector<Vec> out(n);
  for (int j = 0; j < n; ++j) out[j] = dy[j] - a[j] * y[j];
  return out;
}

LinearizedOperator linearized_orbit_operator(const ContactChart& chart,
                                             const PerturbationData& pert,
                                             const ReebOrbit& orbit) {
  constexpr double kHypothesisTol = 1e-8;
  constexpr double kFieldStep = 1e-3;
  LinearizedOperator op;
  op.period = orbit.period;
  op.points = orbit.samples;
  const VectorFn field = [&](const Vec& x) { return perturbed_reeb(chart, pert, x); };
  for (const Vec& z : orbit.samples) {
    const double f = pert.f(z);
    const double dg = pert.dg(z).cwiseAbs().maxCoeff();
    if (std::abs(f - 1.0) > kHypothesisTol || dg > kHypothesisTol)
      throw HypothesisViolated("f ≠ 1 or df ≠ 0 on the orbit (|f − 1| = " +
                               std::to_string(std::abs(f - 1.0)) + ", |dg| = " +
                               std::to_string(dg) + ")");
    op.a.push_back(orbit.period * jacobian4(field, z, kFieldStep));
  }
  return op;
}

}  // namespace contactlab
