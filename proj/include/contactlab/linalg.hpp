#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace contactlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;

using ScalarFn = std::function<double(const Vec&)>;
using VectorFn = std::function<Vec(const Vec&)>;
using MatrixFn = std::function<Mat(const Vec&)>;

/// Step used by the fourth-order centered differences on form coefficients.
inline constexpr double kFormStep = 1e-4;

/// Fourth-order centered difference of a vector-valued map along coordinate i.
Vec partial4(const VectorFn& f, const Vec& x, int i, double h = kFormStep);

/// Jacobian J(r, c) = ∂f_r/∂x_c by fourth-order centered differences.
Mat jacobian4(const VectorFn& f, const Vec& x, double h = kFormStep);

/// Gradient of a scalar function by fourth-order centered differences.
Vec gradient4(const ScalarFn& f, const Vec& x, double h = kFormStep);

/// Exterior derivative of a one-form given by its coefficient map:
/// (dα)_{ij} = ∂_i α_j − ∂_j α_i.
Mat exterior_derivative(const VectorFn& alpha, const Vec& x, double h = kFormStep);

/// Pfaffian of a real antisymmetric matrix of even size (Parlett-Reid
/// elimination with pivoting).
double pfaffian(Mat a);

/// Numerical rank with a relative singular-value cutoff.
int numerical_rank(const Mat& a, double tol);

/// Orthonormal basis of the null space of a (columns), singular values below tol.
Mat null_space(const Mat& a, double tol);

/// Orthonormal basis of the column span of a.
Mat column_span(const Mat& a, double tol);

/// Symplectic standard matrix [[0, -I], [I, 0]] acting on pairs (x_i, y_i)
/// interleaved: blocks [[0,-1],[1,0]] along the diagonal.
Mat standard_complex_structure(int rank);

/// Wraps a coordinate difference into (-P/2, P/2] when the period P > 0.
inline double wrap_difference(double d, double period) {
  if (period <= 0.0) return d;
  return d - period * std::round(d / period);
}

}  // namespace contactlab
