#include "contactlab/normal_form.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "contactlab/errors.hpp"
#include "contactlab/parallel.hpp"

namespace contactlab {

namespace {

constexpr double kRankTol = 1e-8;

double max_abs(const Mat& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

// J² = −I and ω(·, J·) symmetric positive definite.
bool is_compatible(const Mat& omega, const Mat& j, double tol) {
  const auto n = omega.rows();
  if (j.rows() != n || j.cols() != n) return false;
  if (n == 0) return true;
  if (max_abs(j * j + Mat::Identity(n, n)) > tol) return false;
  const Mat g = omega * j;
  if (max_abs(g - g.transpose()) > tol * std::max(1.0, max_abs(g))) return false;
  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (g + g.transpose()));
  return eig.eigenvalues().minCoeff() > tol;
}

Mat basis_matrix(const MorseBottSetup& s, const Vec& q) {
  const int d = s.dim_q();
  Mat b(d, d);
  b.col(0) = s.x_theta(q);
  if (s.m > 0) b.middleCols(1, s.m) = s.h_basis(q);
  if (s.g > 0) b.middleCols(1 + s.m, 2 * s.g) = s.g_basis(q);
  return b;
}

}  // namespace

SetupDiagnostics validate_setup(const MorseBottSetup& setup, const std::vector<Vec>& points) {
  SetupDiagnostics d;
  d.rank_gap_low = std::numeric_limits<double>::infinity();
  const int two_g = 2 * setup.g;
  bool rank_ok = true;
  for (const Vec& q : points) {
    const Vec th = setup.theta(q);
    const Vec xt = setup.x_theta(q);
    d.theta_defect = std::max(d.theta_defect, std::abs(th.dot(xt) - 1.0));

    const Mat dth = exterior_derivative(setup.theta, q);
    Eigen::JacobiSVD<Mat> svd(dth);
    const Vec s = svd.singularValues();
    if (two_g > 0) d.rank_gap_low = std::min(d.rank_gap_low, s(two_g - 1));
    for (Eigen::Index i = two_g; i < s.size(); ++i) d.rank_gap_high = std::max(d.rank_gap_high, s(i));
    const int r = numerical_rank(dth, 1e-6);
    if (r != two_g) rank_ok = false;
    d.dtheta_rank = r;

    d.kernel_residual = std::max(d.kernel_residual, (dth.transpose() * xt).cwiseAbs().maxCoeff());
    if (setup.m > 0) {
      const Mat h = setup.h_basis(q);
      d.kernel_residual = std::max(d.kernel_residual, max_abs(dth.transpose() * h));
      d.h_in_xi = std::max(d.h_in_xi, (th.transpose() * h).cwiseAbs().maxCoeff());
    }
    if (numerical_rank(basis_matrix(setup, q), kRankTol) != setup.dim_q()) rank_ok = false;
  }
  if (two_g == 0) d.rank_gap_low = 0.0;
  d.valid = rank_ok && d.theta_defect < 1e-10 && d.rank_gap_high < 1e-10 &&
            (two_g == 0 || d.rank_gap_low > 1e-6) && d.kernel_residual < 1e-8 && d.h_in_xi < 1e-8;
  return d;
}

MorseBottSetup circle_setup() {
  MorseBottSetup s;
  s.name = "circle";
  s.theta = [](const Vec&) { return Vec::Ones(1); };
  s.x_theta = [](const Vec&) { return Vec::Ones(1); };
  s.h_basis = [](const Vec&) { return Mat(1, 0); };
  s.g_basis = [](const Vec&) { return Mat(1, 0); };
  s.periods = Vec::Constant(1, 2.0 * std::numbers::pi);
  return s;
}

MorseBottSetup torus_setup() {
  MorseBottSetup s;
  s.name = "torus";
  s.m = 1;
  s.theta = [](const Vec&) { return Vec::Unit(2, 0); };
  s.x_theta = [](const Vec&) { return Vec::Unit(2, 0); };
  s.h_basis = [](const Vec&) { return Mat(Vec::Unit(2, 1)); };
  s.g_basis = [](const Vec&) { return Mat(2, 0); };
  s.periods = Vec::Ones(2);
  return s;
}

MorseBottSetup mixed_setup(int m, int g) {
  if (m < 0 || g < 0) throw std::invalid_argument("mixed_setup: negative dimension");
  MorseBottSetup s;
  s.name = "mixed";
  s.m = m;
  s.g = g;
  const int d = 1 + m + 2 * g;
  const int a0 = 1 + m;
  s.theta = [=](const Vec& q) {
    Vec th = Vec::Zero(d);
    th(0) = 1.0;
    for (int j = 0; j < g; ++j) {
      th(a0 + 2 * j) = -0.5 * q(a0 + 2 * j + 1);
      th(a0 + 2 * j + 1) = 0.5 * q(a0 + 2 * j);
    }
    return th;
  };
  s.x_theta = [=](const Vec&) { return Vec::Unit(d, 0); };
  s.h_basis = [=](const Vec&) {
    Mat h = Mat::Zero(d, m);
    for (int i = 0; i < m; ++i) h(1 + i, i) = 1.0;
    return h;
  };
  s.g_basis = [=](const Vec& q) {
    Mat gb = Mat::Zero(d, 2 * g);
    for (int j = 0; j < g; ++j) {
      gb(a0 + 2 * j, 2 * j) = 1.0;
      gb(0, 2 * j) = 0.5 * q(a0 + 2 * j + 1);
      gb(a0 + 2 * j + 1, 2 * j + 1) = 1.0;
      gb(0, 2 * j + 1) = -0.5 * q(a0 + 2 * j);
    }
    return gb;
  };
  s.periods = Vec::Zero(d);
  s.periods.head(1 + m).setOnes();
  return s;
}

double verify_tube(const ContactChart& chart, const std::vector<Vec>& base_points,
                   const std::vector<int>& fiber_indices, const TubeOptions& opts) {
  const int f = static_cast<int>(fiber_indices.size());
  const double rmax = opts.search_radius;

  for (const Vec& b : base_points)
    if (std::abs(chart.contact_volume(b)) < 1e-12)
      throw NotContact("contact volume vanishes on the zero section", 0.0);
  if (f == 0) return rmax;

  // Directions: grid points on the boundary of the cube [-1, 1]^f.
  int per_dim = opts.grid_per_dim;
  while (per_dim > 2 && std::pow(per_dim, f) > opts.max_grid_points) --per_dim;
  std::vector<Vec> dirs;
  const long total = static_cast<long>(std::pow(per_dim, f));
  for (long idx = 0; idx < total; ++idx) {
    Vec v(f);
    long rest = idx;
    bool boundary = false;
    for (int i = 0; i < f; ++i) {
      const int c = static_cast<int>(rest % per_dim);
      rest /= per_dim;
      v(i) = -1.0 + 2.0 * c / (per_dim - 1);
      if (c == 0 || c == per_dim - 1) boundary = true;
    }
    if (boundary) dirs.push_back(v.normalized());
  }

  constexpr int kRadialSamples = 16;
  const std::size_t jobs = base_points.size() * dirs.size();
  std::vector<double> radius(jobs, rmax);
  parallel_for(jobs, [&](std::size_t job) {
    const Vec& base = base_points[job / dirs.size()];
    const Vec& dir = dirs[job % dirs.size()];
    const double v0 = chart.contact_volume(base);
    auto ok = [&](double r) {
      Vec x = base;
      for (int i = 0; i < f; ++i) x(fiber_indices[i]) += r * dir(i);
      const double v = chart.contact_volume(x);
      return v * v0 > 0.0 && std::abs(v) >= 0.5 * std::abs(v0);
    };
    double lo = 0.0;
    for (int s = 1; s <= kRadialSamples; ++s) {
      const double r = rmax * s / kRadialSamples;
      if (ok(r)) {
        lo = r;
        continue;
      }
      double hi = r;
      for (int it = 0; it < opts.bisection_steps; ++it) {
        const double mid = 0.5 * (lo + hi);
        (ok(mid) ? lo : hi) = mid;
      }
      radius[job] = lo;
      return;
    }
  });

  const double delta = *std::min_element(radius.begin(), radius.end());
  if (delta < opts.requested_radius)
    throw NotContact("contact volume bound fails inside the requested tube (verified radius " +
                         std::to_string(delta) + ")",
                     delta);
  return delta;
}

ThickeningChart::ThickeningChart(MorseBottSetup setup, Mat omega)
    : setup_(std::move(setup)),
      omega_(std::move(omega)),
      chart_("thickening", 0, [](const Vec& x) { return x; }) {
  if (omega_.rows() != omega_.cols() || omega_.rows() % 2 != 0)
    throw std::invalid_argument("fiber form must be square of even size");
  if (max_abs(omega_ + omega_.transpose()) > 1e-14)
    throw std::invalid_argument("fiber form must be antisymmetric");
  if (omega_.rows() > 0 && std::abs(omega_.determinant()) < 1e-12)
    throw SingularChart("fiber form is degenerate");

  const int dq = setup_.dim_q();
  const int m = setup_.m;
  const int dim = dq + m + static_cast<int>(omega_.rows());
  const int n = (dim - 1) / 2;

  // Capture copies so the chart stays valid independently of this object.
  const MorseBottSetup s = setup_;
  const Mat om = omega_;
  VectorFn lambda = [s, om, dq, m, dim](const Vec& x) {
    const Vec q = x.head(dq);
    Vec l = Vec::Zero(dim);
    l.head(dq) = s.theta(q);
    if (m > 0) {
      const Mat p = basis_matrix(s, q).inverse().middleRows(1, m);
      l.head(dq) += p.transpose() * x.segment(dq, m);
    }
    if (om.rows() > 0) l.tail(om.rows()) = 0.5 * om.transpose() * x.tail(om.rows());
    return l;
  };
  Vec periods = Vec::Zero(dim);
  if (setup_.periods.size() == dq) periods.head(dq) = setup_.periods;
  chart_ = ContactChart(setup_.name + "_thickening", n, std::move(lambda), {}, periods);
}

Vec ThickeningChart::zero_section_point(const Vec& q) const {
  Vec x = Vec::Zero(dim());
  x.head(setup_.dim_q()) = q;
  return x;
}

std::vector<int> ThickeningChart::fiber_indices() const {
  std::vector<int> idx;
  for (int i = mu_offset(); i < dim(); ++i) idx.push_back(i);
  return idx;
}

Mat ThickeningChart::tn_projector(const Vec& q) const {
  if (setup_.m == 0) return Mat(0, setup_.dim_q());
  return basis_matrix(setup_, q).inverse().middleRows(1, setup_.m);
}

Vec ThickeningChart::theta_pullback(const Vec& x) const {
  Vec l = Vec::Zero(dim());
  l.head(setup_.dim_q()) = setup_.theta(x.head(setup_.dim_q()));
  return l;
}

Vec ThickeningChart::theta_g(const Vec& x) const {
  Vec l = Vec::Zero(dim());
  if (setup_.m > 0)
    l.head(setup_.dim_q()) =
        tn_projector(x.head(setup_.dim_q())).transpose() * x.segment(mu_offset(), setup_.m);
  return l;
}

Vec ThickeningChart::radial_form(const Vec& x) const {
  Vec l = Vec::Zero(dim());
  if (k() > 0) l.tail(2 * k()) = omega_.transpose() * x.tail(2 * k());
  return l;
}

Vec ThickeningChart::radial_field(const Vec& x) const {
  Vec r = Vec::Zero(dim());
  if (k() > 0) r.tail(2 * k()) = x.tail(2 * k());
  return r;
}

Mat ThickeningChart::omega_tilde(const Vec&) const {
  Mat w = Mat::Zero(dim(), dim());
  if (k() > 0) w.bottomRightCorner(2 * k(), 2 * k()) = omega_;
  return w;
}

Vec ThickeningChart::lifted_x_theta(const Vec& q) const {
  Vec v = Vec::Zero(dim());
  v.head(setup_.dim_q()) = setup_.x_theta(q);
  return v;
}

double ThickeningChart::dlambda_decomposition_error(const Vec& x) const {
  const Mat lhs = chart_.dlambda(x);
  const Mat rhs = exterior_derivative([this](const Vec& y) { return theta_pullback(y); }, x) +
                  exterior_derivative([this](const Vec& y) { return theta_g(y); }, x) +
                  omega_tilde(x);
  return max_abs(lhs - rhs);
}

ThickeningChart build_thickening(const MorseBottSetup& setup, const Mat& omega,
                                 const TubeOptions& opts, std::vector<Vec> base_points) {
  if (base_points.empty()) base_points.push_back(Vec::Zero(setup.dim_q()));
  const SetupDiagnostics diag = validate_setup(setup, base_points);
  if (!diag.valid) throw HypothesisViolated("Morse-Bott set-up invariants fail on the base points");

  ThickeningChart tc(setup, omega);
  std::vector<Vec> zero;
  for (const Vec& q : base_points) zero.push_back(tc.zero_section_point(q));
  tc.tube_radius = verify_tube(tc.chart(), zero, tc.fiber_indices(), opts);
  return tc;
}

Vec reeb_of_thickening(const ThickeningChart& tc, const Vec& q) {
  return reeb_field(tc.chart(), tc.zero_section_point(q));
}

ContactSplitting split_contact_distribution(const ThickeningChart& tc, const Vec& x) {
  const auto& s = tc.setup();
  const int dq = s.dim_q();
  const int dim = tc.dim();
  const Vec q = x.head(dq);
  const Vec xf = reeb_field(tc.chart(), x);
  const Vec tg = tc.theta_g(x);

  const Mat ker = null_space(s.theta(q).transpose(), kRankTol);
  ContactSplitting out;
  out.v_basis = Mat::Zero(dim, ker.cols());
  for (Eigen::Index c = 0; c < ker.cols(); ++c) {
    Vec v = Vec::Zero(dim);
    v.head(dq) = ker.col(c);
    out.v_basis.col(c) = v - tg.dot(v) * xf;
  }

  const int nv = dim - dq;
  out.w_basis = Mat::Zero(dim, nv);
  const Vec rf = tc.radial_form(x);
  for (int i = 0; i < nv; ++i) {
    const Vec e = Vec::Unit(dim, dq + i);
    out.w_basis.col(i) = e - 0.5 * rf.dot(e) * xf;
  }

  Mat stacked(dim, out.v_basis.cols() + out.w_basis.cols());
  stacked << out.v_basis, out.w_basis;
  out.rank = numerical_rank(stacked, kRankTol);
  const Vec lam = tc.chart().lambda(x);
  if (stacked.cols() > 0) out.annihilation = (lam.transpose() * stacked).cwiseAbs().maxCoeff();
  return out;
}

RadialReport radial_identities(const ThickeningChart& tc, double c, const std::vector<Vec>& grid) {
  RadialReport rep;
  const int dim = tc.dim();
  const int k2 = 2 * tc.k();
  Mat dr = Mat::Identity(dim, dim);
  if (k2 > 0) dr.bottomRightCorner(k2, k2) *= c;
  const VectorFn rform = [&tc](const Vec& y) { return tc.radial_form(y); };
  for (const Vec& x : grid) {
    Vec xc = x;
    if (k2 > 0) xc.tail(k2) *= c;
    const Mat pulled = dr.transpose() * tc.omega_tilde(xc) * dr;
    rep.scaling_error = std::max(rep.scaling_error, max_abs(pulled - c * c * tc.omega_tilde(x)));
    rep.cartan_error = std::max(
        rep.cartan_error, max_abs(exterior_derivative(rform, x) - 2.0 * tc.omega_tilde(x)));
  }
  return rep;
}

ModelSplitting model_splitting(const ThickeningChart& tc, const Vec& q) {
  const auto& s = tc.setup();
  ModelSplitting sp;
  sp.m = s.m;
  sp.g = s.g;
  sp.k = tc.k();
  const int dim = tc.dim();
  const int dq = s.dim_q();
  const Vec x = tc.zero_section_point(q);
  const Vec xf = reeb_field(tc.chart(), x);
  const Vec lam = tc.chart().lambda(x);
  auto lift = [&](const Vec& v) {
    Vec w = Vec::Zero(dim);
    w.head(dq) = v;
    return Vec(w - lam.dot(w) * xf);
  };

  sp.basis = Mat::Zero(dim, dim);
  sp.basis.col(0) = xf;
  if (s.g > 0) {
    const Mat gb = s.g_basis(q);
    for (int j = 0; j < 2 * s.g; ++j) sp.basis.col(sp.g_offset() + j) = lift(gb.col(j));
  }
  if (s.m > 0) {
    const Mat hb = s.h_basis(q);
    for (int i = 0; i < s.m; ++i) {
      sp.basis.col(sp.n_offset() + i) = lift(hb.col(i));
      sp.basis(tc.mu_offset() + i, sp.nstar_offset() + i) = 1.0;
    }
  }
  for (int a = 0; a < 2 * sp.k; ++a) sp.basis(tc.e_offset() + a, sp.e_offset() + a) = 1.0;
  sp.omega = sp.basis.transpose() * tc.chart().dlambda(x) * sp.basis;
  return sp;
}

ModelSplitting abstract_splitting(int m, const Mat& omega_g, const Mat& omega_e) {
  ModelSplitting sp;
  sp.m = m;
  sp.g = static_cast<int>(omega_g.rows()) / 2;
  sp.k = static_cast<int>(omega_e.rows()) / 2;
  const int d = sp.dim();
  sp.basis = Mat::Identity(d, d);
  sp.omega = Mat::Zero(d, d);
  if (sp.g > 0) sp.omega.block(sp.g_offset(), sp.g_offset(), 2 * sp.g, 2 * sp.g) = omega_g;
  for (int i = 0; i < m; ++i) {
    sp.omega(sp.n_offset() + i, sp.nstar_offset() + i) = -1.0;
    sp.omega(sp.nstar_offset() + i, sp.n_offset() + i) = 1.0;
  }
  if (sp.k > 0) sp.omega.bottomRightCorner(2 * sp.k, 2 * sp.k) = omega_e;
  return sp;
}

AdaptedJ make_adapted_J(const ModelSplitting& split, const Mat& j_g, const Mat& j_e, const Mat& b) {
  const int g2 = 2 * split.g;
  const int k2 = 2 * split.k;
  const int m = split.m;
  if (j_g.rows() != g2 || j_g.cols() != g2) throw BadBlocks("J_G has the wrong size");
  if (j_e.rows() != k2 || j_e.cols() != k2) throw BadBlocks("J_E has the wrong size");
  if (b.rows() != k2 || b.cols() != g2) throw BadBlocks("B has the wrong size");

  const Mat omega_g = split.omega.block(split.g_offset(), split.g_offset(), g2, g2);
  const Mat omega_n = split.omega.block(split.n_offset(), split.n_offset(), 2 * m, 2 * m);
  const Mat omega_e = split.omega.block(split.e_offset(), split.e_offset(), k2, k2);
  if (!is_compatible(omega_g, j_g, 1e-10)) throw BadBlocks("J_G is not compatible with ω_G");
  if (!is_compatible(omega_e, j_e, 1e-10)) throw BadBlocks("J_E is not compatible with Ω");
  if (max_abs(b * j_g) > 1e-12) throw BadBlocks("B·J_G ≠ 0");

  AdaptedJ out{j_g, j_e, b, Mat::Zero(split.dim(), split.dim())};
  Mat& j = out.j;
  if (g2 > 0) j.block(split.g_offset(), split.g_offset(), g2, g2) = j_g;
  if (k2 > 0 && g2 > 0) j.block(split.e_offset(), split.g_offset(), k2, g2) = b;
  if (m > 0)
    j.block(split.n_offset(), split.n_offset(), 2 * m, 2 * m) = compatible_complex_structure(omega_n);
  if (k2 > 0) j.block(split.e_offset(), split.e_offset(), k2, k2) = j_e;

  const AdaptedCheck chk = check_adapted(split, j);
  if (chk.square_defect > 1e-10) throw BadBlocks("assembled J does not satisfy J² = −Π");
  if (!chk.adapted) throw BadBlocks("assembled J fails the adaptedness test");
  return out;
}

AdaptedCheck check_adapted(const ModelSplitting& split, const Mat& j) {
  AdaptedCheck out;
  const int d = split.dim();
  const int dq = split.dim_q();
  const int m = split.m;
  Mat pi = Mat::Identity(d, d);
  pi(0, 0) = 0.0;
  out.square_defect = max_abs(j * j + pi);

  const Mat tq = Mat::Identity(d, d).leftCols(dq);
  const Mat tn = Mat::Identity(d, d).middleCols(split.n_offset(), m);
  const Mat jtq = j * tq;
  const Mat jtn = j * tn;

  Mat base(d, dq + m);
  base << tq, jtn;
  Mat all(d, dq + m + dq);
  all << tq, jtn, jtq;
  const int r_base = numerical_rank(base, kRankTol);
  out.containment_rank = numerical_rank(all, kRankTol);
  out.expected_rank = dq + m;
  out.containment = r_base == out.expected_rank && out.containment_rank == out.expected_rank;

  Mat pair(d, 2 * dq);
  pair << tq, -jtq;
  const Mat ns = null_space(pair, kRankTol);
  const Mat inter = column_span(tq * ns.topRows(dq), kRankTol);
  out.intersection_dim = static_cast<int>(inter.cols());

  Mat foliation(d, 1 + m);
  foliation.col(0) = Vec::Unit(d, 0);
  if (m > 0) foliation.rightCols(m) = tn;
  Mat stacked(d, inter.cols() + foliation.cols());
  stacked << inter, foliation;
  out.splitting = out.intersection_dim + 1 + m == dq && numerical_rank(stacked, kRankTol) == dq;

  out.adapted = out.containment && out.splitting;
  return out;
}

Mat compatible_model_J(const ModelSplitting& split, const Mat& s) {
  const int d = split.dim();
  const int n2 = d - 1;
  if (s.rows() != n2 || s.cols() != n2) throw std::invalid_argument("S must be 2n × 2n");
  const Mat w = split.omega.bottomRightCorner(n2, n2);
  const Mat j0 = compatible_complex_structure(w);
  const Mat a = w.fullPivLu().solve(0.5 * (s + s.transpose()));
  const Mat id = Mat::Identity(n2, n2);
  const Mat phi = (id - 0.5 * a).fullPivLu().solve(id + 0.5 * a);
  Mat j = Mat::Zero(d, d);
  j.bottomRightCorner(n2, n2) = phi * j0 * phi.fullPivLu().inverse();
  return j;
}

std::vector<Mat> coupling_null_space(const Mat& j_g, int rank_e) {
  const auto g2 = j_g.rows();
  std::vector<Mat> out;
  if (g2 == 0 || rank_e == 0) return out;
  // vec(B J_G) = (J_Gᵀ ⊗ I) vec(B), column-major vec.
  Mat kron = Mat::Zero(rank_e * g2, rank_e * g2);
  for (Eigen::Index r = 0; r < g2; ++r)
    for (Eigen::Index c = 0; c < g2; ++c)
      kron.block(r * rank_e, c * rank_e, rank_e, rank_e) =
          j_g(c, r) * Mat::Identity(rank_e, rank_e);
  const Mat ns = null_space(kron, 1e-12);
  for (Eigen::Index c = 0; c < ns.cols(); ++c)
    out.push_back(Eigen::Map<const Mat>(ns.col(c).data(), rank_e, g2));
  return out;
}

}  // namespace contactlab
