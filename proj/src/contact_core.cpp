#include "contactlab/contact_core.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "contactlab/errors.hpp"

namespace contactlab {

namespace {

constexpr double kRankTol = 1e-10;

Mat dual_matrix(const ContactChart& chart, const Vec& x) {
  // ♯_λ(v) = dλᵀ v + λ λᵀ v
  const Vec lam = chart.lambda(x);
  return chart.dlambda(x).transpose() + lam * lam.transpose();
}

}  // namespace

ContactChart::ContactChart(std::string name, int n, VectorFn lambda, MatrixFn dlambda,
                           Vec periods, DomainFn domain)
    : name_(std::move(name)),
      n_(n),
      lambda_(std::move(lambda)),
      dlambda_(std::move(dlambda)),
      periods_(periods.size() == 0 ? Vec::Zero(2 * n + 1) : std::move(periods)),
      domain_(std::move(domain)) {}

Mat ContactChart::dlambda(const Vec& x) const {
  if (dlambda_) return dlambda_(x);
  return exterior_derivative(lambda_, x);
}

Vec ContactChart::displacement(const Vec& from, const Vec& to) const {
  Vec d = to - from;
  for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = wrap_difference(d(i), periods_(i));
  return d;
}

double ContactChart::contact_volume(const Vec& x) const {
  const int d = dim();
  const Vec lam = lambda(x);
  Mat aug = Mat::Zero(d + 1, d + 1);
  aug.block(0, 1, 1, d) = lam.transpose();
  aug.block(1, 0, d, 1) = -lam;
  aug.bottomRightCorner(d, d) = dlambda(x);
  return pfaffian(aug);
}

PerturbationData PerturbationData::from_differential(ScalarFn f, VectorFn df) {
  PerturbationData p;
  p.f = f;
  p.dg = [f, df](const Vec& x) -> Vec { return df(x) / f(x); };
  return p;
}

double PerturbationData::g(const Vec& x) const { return std::log(f(x)); }

double PerturbationData::dg_consistency(const Vec& x) const {
  const ScalarFn logf = [this](const Vec& y) { return std::log(f(y)); };
  return (dg(x) - gradient4(logf, x)).cwiseAbs().maxCoeff();
}

ReebSolve solve_reeb(const ContactChart& chart, const Vec& x) {
  const int d = chart.dim();
  Mat a(d + 1, d);
  a.row(0) = chart.lambda(x).transpose();
  a.bottomRows(d) = chart.dlambda(x).transpose();
  Vec b = Vec::Zero(d + 1);
  b(0) = 1.0;

  Eigen::JacobiSVD<Mat> svd(a);
  const Vec s = svd.singularValues();
  const double smax = s(0);
  const double smin = s(d - 1);
  if (!(smin > kRankTol * std::max(1.0, smax))) {
    throw SingularChart("Reeb system rank deficient on chart '" + chart.name() +
                        "' (smallest singular value " + std::to_string(smin) + ")");
  }
  ReebSolve out;
  out.field = a.colPivHouseholderQr().solve(b);
  out.residual = (a * out.field - b).norm();
  out.condition = smax / smin;
  return out;
}

Vec reeb_field(const ContactChart& chart, const Vec& x) { return solve_reeb(chart, x).field; }

Vec project_xi(const ContactChart& chart, const Vec& z, const Vec& x) {
  return z - chart.lambda(x).dot(z) * reeb_field(chart, x);
}

Vec flat_dual(const ContactChart& chart, const Vec& alpha, const Vec& x, double* residual) {
  const Mat m = dual_matrix(chart, x);
  Eigen::FullPivLU<Mat> lu(m);
  lu.setThreshold(kRankTol);
  if (!lu.isInvertible()) {
    throw SingularChart("λ-dual map not invertible on chart '" + chart.name() + "'");
  }
  Vec v = lu.solve(alpha);
  if (residual) *residual = (m * v - alpha).norm();
  return v;
}

Vec sharp_dual(const ContactChart& chart, const Vec& v, const Vec& x) {
  return dual_matrix(chart, x) * v;
}

Vec xi_dual(const ContactChart& chart, const Vec& alpha, const Vec& x) {
  return project_xi(chart, flat_dual(chart, alpha, x), x);
}

Vec perturbed_reeb(const ContactChart& chart, const PerturbationData& pert, const Vec& x) {
  const Vec y = xi_dual(chart, pert.dg(x), x);
  return (reeb_field(chart, x) + y) / pert.f(x);
}

Vec perturbed_projection(const ContactChart& chart, const PerturbationData& pert,
                         const Vec& z, const Vec& x) {
  const Vec y = xi_dual(chart, pert.dg(x), x);
  return project_xi(chart, z, x) - chart.lambda(x).dot(z) * y;
}

ContactChart conformal_chart(const ContactChart& chart, const PerturbationData& pert) {
  VectorFn lam = [chart, pert](const Vec& x) -> Vec { return pert.f(x) * chart.lambda(x); };
  MatrixFn dlam = [chart, pert](const Vec& x) -> Mat {
    const Vec l = chart.lambda(x);
    const Vec dg = pert.dg(x);
    return pert.f(x) * (dg * l.transpose() - l * dg.transpose() + chart.dlambda(x));
  };
  return ContactChart(chart.name() + "*f", chart.n(), lam, dlam, chart.periods());
}

Mat xi_frame(const ContactChart& chart, const Vec& x) {
  const int d = chart.dim();
  const Vec reeb = reeb_field(chart, x);
  const Vec lam = chart.lambda(x);
  Mat frame(d, 2 * chart.n());
  int k = 0;
  for (int i = 0; i < d && k < 2 * chart.n(); ++i) {
    Vec v = Vec::Unit(d, i) - lam(i) * reeb;
    for (int j = 0; j < k; ++j) v -= frame.col(j).dot(v) * frame.col(j);
    for (int j = 0; j < k; ++j) v -= frame.col(j).dot(v) * frame.col(j);
    const double nv = v.norm();
    if (nv < 1e-8) continue;
    frame.col(k++) = v / nv;
  }
  if (k != 2 * chart.n()) throw SingularChart("could not build a ξ frame on '" + chart.name() + "'");
  return frame;
}

Mat compatible_complex_structure(const Mat& omega) {
  const Mat w = 0.5 * (omega - omega.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(-w * w);
  const Vec ev = es.eigenvalues();
  if (ev.minCoeff() <= 0.0) throw SingularChart("degenerate symplectic matrix");
  const Mat inv_sqrt =
      es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  return -w * inv_sqrt;
}

Mat canonical_triad_J(const ContactChart& chart, const Vec& x) {
  const Mat f = xi_frame(chart, x);
  const Mat omega = f.transpose() * chart.dlambda(x) * f;
  const Mat jx = compatible_complex_structure(omega);
  const Vec reeb = reeb_field(chart, x);
  const Mat proj = Mat::Identity(chart.dim(), chart.dim()) - reeb * chart.lambda(x).transpose();
  return f * jx * f.transpose() * proj;
}

Mat triad_metric(const ContactChart& chart, const Mat& j, const Vec& x) {
  const Vec lam = chart.lambda(x);
  return chart.dlambda(x) * j + lam * lam.transpose();
}

Vec triad_gradient(const ContactChart& chart, const Mat& j, const Vec& dh, const Vec& x) {
  const int d = chart.dim();
  const Vec reeb = reeb_field(chart, x);
  const Mat proj = Mat::Identity(d, d) - reeb * chart.lambda(x).transpose();
  const double sq_err = (j * j + proj).cwiseAbs().maxCoeff();
  if (sq_err > 1e-8) {
    throw IncompatibleJ("J² ≠ −Π (max deviation " + std::to_string(sq_err) + ")");
  }
  const Mat g = triad_metric(chart, j, x);
  const double asym = (g - g.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8 * std::max(1.0, g.cwiseAbs().maxCoeff())) {
    throw IncompatibleJ("dλ(·, J·) is not symmetric (asymmetry " + std::to_string(asym) + ")");
  }
  Eigen::LLT<Mat> llt(0.5 * (g + g.transpose()));
  if (llt.info() != Eigen::Success) throw IncompatibleJ("triad metric is not positive definite");
  return llt.solve(dh);
}

Vec triad_gradient(const ContactChart& chart, const MatrixFn& j, const ScalarFn& h,
                   const Vec& x) {
  return triad_gradient(chart, j(x), gradient4(h, x), x);
}

}  // namespace contactlab
