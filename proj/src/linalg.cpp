#include "contactlab/linalg.hpp"

#include <utility>

namespace contactlab {

Vec partial4(const VectorFn& f, const Vec& x, int i, double h) {
  Vec xp = x;
  auto at = [&](double s) {
    xp(i) = x(i) + s;
    return f(xp);
  };
  const Vec f2 = at(2 * h);
  const Vec f1 = at(h);
  const Vec m1 = at(-h);
  const Vec m2 = at(-2 * h);
  return (-f2 + 8.0 * f1 - 8.0 * m1 + m2) / (12.0 * h);
}

Mat jacobian4(const VectorFn& f, const Vec& x, double h) {
  const Vec f0 = f(x);
  Mat jac(f0.size(), x.size());
  for (int c = 0; c < x.size(); ++c) jac.col(c) = partial4(f, x, c, h);
  return jac;
}

Vec gradient4(const ScalarFn& f, const Vec& x, double h) {
  VectorFn wrapped = [&](const Vec& y) {
    Vec v(1);
    v(0) = f(y);
    return v;
  };
  Vec g(x.size());
  for (int i = 0; i < x.size(); ++i) g(i) = partial4(wrapped, x, i, h)(0);
  return g;
}

Mat exterior_derivative(const VectorFn& alpha, const Vec& x, double h) {
  // jac(j, i) = ∂_i α_j
  const Mat jac = jacobian4(alpha, x, h);
  return jac.transpose() - jac;
}

double pfaffian(Mat a) {
  const Eigen::Index n = a.rows();
  if (n % 2 != 0) return 0.0;
  if (n == 0) return 1.0;
  double pf = 1.0;
  for (Eigen::Index k = 0; k < n - 1; k += 2) {
    Eigen::Index kp = k + 1;
    a.col(k).tail(n - k - 1).cwiseAbs().maxCoeff(&kp);
    kp += k + 1;
    if (kp != k + 1) {
      a.row(k + 1).swap(a.row(kp));
      a.col(k + 1).swap(a.col(kp));
      pf = -pf;
    }
    if (a(k + 1, k) == 0.0) return 0.0;
    pf *= a(k, k + 1);
    if (k + 2 < n) {
      const Eigen::Index m = n - k - 2;
      const Vec tau = a.row(k).tail(m).transpose() / a(k, k + 1);
      const Vec col = a.col(k + 1).tail(m);
      a.bottomRightCorner(m, m) += tau * col.transpose() - col * tau.transpose();
    }
  }
  return pf;
}

int numerical_rank(const Mat& a, double tol) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(a);
  const Vec s = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > tol) ++r;
  return r;
}

Mat null_space(const Mat& a, double tol) {
  if (a.cols() == 0) return Mat(0, 0);
  if (a.rows() == 0) return Mat::Identity(a.cols(), a.cols());
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
  const Vec s = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > tol) ++r;
  return svd.matrixV().rightCols(a.cols() - r);
}

Mat column_span(const Mat& a, double tol) {
  if (a.cols() == 0) return Mat(a.rows(), 0);
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU);
  const Vec s = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > tol) ++r;
  return svd.matrixU().leftCols(r);
}

Mat standard_complex_structure(int rank) {
  Mat j = Mat::Zero(rank, rank);
  for (int i = 0; i + 1 < rank; i += 2) {
    j(i, i + 1) = -1.0;
    j(i + 1, i) = 1.0;
  }
  return j;
}

}  // namespace contactlab
