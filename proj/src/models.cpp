#include "contactlab/models.hpp"

#include <cmath>
#include <numbers>

namespace contactlab::models {

ContactChart darboux(int n, double scale) {
  VectorFn lam = [n, scale](const Vec& x) -> Vec {
    Vec l = Vec::Zero(2 * n + 1);
    for (int i = 0; i < n; ++i) l(q_index(n, i)) = -scale * x(p_index(n, i));
    l(z_index(n)) = scale;
    return l;
  };
  MatrixFn dlam = [n, scale](const Vec&) -> Mat {
    // d(−p dq) = dq ∧ dp
    Mat d = Mat::Zero(2 * n + 1, 2 * n + 1);
    for (int i = 0; i < n; ++i) {
      d(q_index(n, i), p_index(n, i)) = scale;
      d(p_index(n, i), q_index(n, i)) = -scale;
    }
    return d;
  };
  return ContactChart(scale == 1.0 ? "darboux" : "scaled_darboux", n, lam, dlam);
}

ContactChart exp_scaled_darboux() {
  const ContactChart base = darboux(1);
  VectorFn lam = [base](const Vec& x) -> Vec { return std::exp(x(2)) * base.lambda(x); };
  MatrixFn dlam = [base](const Vec& x) -> Mat {
    const Vec l = base.lambda(x);
    const Vec dz = Vec::Unit(3, 2);
    return std::exp(x(2)) * (dz * l.transpose() - l * dz.transpose() + base.dlambda(x));
  };
  return ContactChart("exp_scaled_darboux", 1, lam, dlam);
}

ContactChart torus() {
  VectorFn lam = [](const Vec& x) -> Vec {
    Vec l(3);
    l << 1.0, x(2), 0.0;
    return l;
  };
  MatrixFn dlam = [](const Vec&) -> Mat {
    // d(p dt₂) = dp ∧ dt₂
    Mat d = Mat::Zero(3, 3);
    d(2, 1) = 1.0;
    d(1, 2) = -1.0;
    return d;
  };
  Vec periods(3);
  periods << 1.0, 1.0, 0.0;
  return ContactChart("torus", 1, lam, dlam, periods);
}

ContactChart weighted_ellipsoid(double w0, const std::vector<double>& w) {
  const int n = static_cast<int>(w.size());
  VectorFn lam = [w0, w, n](const Vec& x) -> Vec {
    Vec l(2 * n + 1);
    double quad = 0.0;
    for (int j = 0; j < n; ++j) {
      const double xj = x(1 + 2 * j), yj = x(2 + 2 * j);
      quad += w[j] * (xj * xj + yj * yj);
      l(1 + 2 * j) = -0.5 * yj;
      l(2 + 2 * j) = 0.5 * xj;
    }
    l(0) = (1.0 - 0.5 * quad) / w0;
    return l;
  };
  MatrixFn dlam = [w0, w, n](const Vec& x) -> Mat {
    Mat d = Mat::Zero(2 * n + 1, 2 * n + 1);
    for (int j = 0; j < n; ++j) {
      const int ix = 1 + 2 * j, iy = 2 + 2 * j;
      d(ix, 0) = -w[j] / w0 * x(ix);
      d(0, ix) = -d(ix, 0);
      d(iy, 0) = -w[j] / w0 * x(iy);
      d(0, iy) = -d(iy, 0);
      d(ix, iy) = 1.0;
      d(iy, ix) = -1.0;
    }
    return d;
  };
  Vec periods = Vec::Zero(2 * n + 1);
  periods(0) = 2.0 * std::numbers::pi;
  return ContactChart("weighted_ellipsoid", n, lam, dlam, periods);
}

Vec ellipsoid_flow(double w0, const std::vector<double>& w, const Vec& x, double t) {
  Vec y = ellipsoid_flow_derivative(w0, w, t) * x;
  y(0) += w0 * t;
  return y;
}

Mat ellipsoid_flow_derivative(double /*w0*/, const std::vector<double>& w, double t) {
  const int n = static_cast<int>(w.size());
  Mat m = Mat::Identity(2 * n + 1, 2 * n + 1);
  for (int j = 0; j < n; ++j) {
    const double c = std::cos(w[j] * t), s = std::sin(w[j] * t);
    const int ix = 1 + 2 * j, iy = 2 + 2 * j;
    m(ix, ix) = c;
    m(ix, iy) = -s;
    m(iy, ix) = s;
    m(iy, iy) = c;
  }
  return m;
}

Vec darboux_flat_formula(int n, double alpha0, const Vec& a, const Vec& b, const Vec& x) {
  Vec v = Vec::Zero(2 * n + 1);
  double v0 = alpha0;
  for (int k = 0; k < n; ++k) v0 += x(p_index(n, k)) * b(k);
  v(z_index(n)) = v0;
  for (int i = 0; i < n; ++i) v(q_index(n, i)) = b(i);
  for (int j = 0; j < n; ++j) v(p_index(n, j)) = -a(j) - x(p_index(n, j)) * alpha0;
  return v;
}

PerturbationData random_polynomial_perturbation(CounterRng& rng, int dim) {
  const double a0 = rng.uniform(-1.0, 1.0);
  const Vec a = rng.uniform_vec(dim, -1.0, 1.0);
  Mat b = Mat::Zero(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) b(i, j) = b(j, i) = rng.uniform(-0.5, 0.5);
  auto p = [a0, a, b](const Vec& x) { return a0 + a.dot(x) + 0.5 * x.dot(b * x); };
  ScalarFn f = [p](const Vec& x) { return 0.5 + p(x) * p(x); };
  VectorFn df = [p, a, b](const Vec& x) -> Vec { return 2.0 * p(x) * (a + b * x); };
  return PerturbationData::from_differential(f, df);
}

}  // namespace contactlab::models

