#include "contactlab/decay_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "contactlab/errors.hpp"

namespace contactlab {

namespace {

using std::numbers::pi;

Mat basis_samples(int n_modes, double period, int n_t) {
  Mat phi(2 * n_modes + 1, n_t);
  const double c = std::sqrt(2.0 / period);
  for (int j = 0; j < n_t; ++j) {
    const double t = period * j / n_t;
    phi(0, j) = 1.0 / std::sqrt(period);
    for (int k = 1; k <= n_modes; ++k) {
      const double w = 2.0 * pi * k * t / period;
      phi(2 * k - 1, j) = c * std::cos(w);
      phi(2 * k, j) = c * std::sin(w);
    }
  }
  return phi;
}

void check_grid(const SpectralOperator& op, const Forcing& forcing, const Vec& zeta0,
                const CylinderGrid& grid) {
  const auto dim = op.matrix.rows();
  if (zeta0.size() != dim)
    throw ModeMismatch("initial slice has " + std::to_string(zeta0.size()) +
                       " coefficients, operator has " + std::to_string(dim));
  if (forcing.profile.size() != 0 && forcing.profile.size() != dim)
    throw ModeMismatch("forcing profile size does not match the operator");
  if (grid.n_t < op.basis_size())
    throw ResolutionTooCoarse("n_t = " + std::to_string(grid.n_t) + " cannot resolve " +
                              std::to_string(op.n_modes) + " Fourier modes");
  if (grid.n_tau < 2 || grid.R <= 0.0) throw ResolutionTooCoarse("τ grid needs R > 0 and 2 slices");
  if (forcing.profile.size() != 0 && forcing.delta0 <= 0.0)
    throw OutOfRange("forcing decay rate δ₀ must be positive");
}

// Fills samples and norms from the coefficient columns.
CylinderField assemble(const SpectralOperator& op, const CylinderGrid& grid, const Mat& coeffs) {
  CylinderField f;
  f.R = grid.R;
  f.period = op.period;
  f.rank = op.rank;
  f.n_modes = op.n_modes;
  const int m = op.basis_size();
  const Mat phi = basis_samples(op.n_modes, op.period, grid.n_t);
  for (int i = 0; i < grid.n_tau; ++i) {
    f.taus.push_back(grid.R * i / (grid.n_tau - 1));
    f.coeffs.push_back(coeffs.col(i));
    Mat slice(op.rank, grid.n_t);
    for (int a = 0; a < op.rank; ++a)
      slice.row(a) = coeffs.col(i).segment(a * m, m).transpose() * phi;
    f.slice_norms.push_back(CylinderField::slice_norm(slice, op.period));
    f.slices.push_back(std::move(slice));
  }
  return f;
}

}  // namespace

double growth_factor(double gamma) {
  if (!(gamma > 0.0 && gamma < 0.5)) throw OutOfRange("γ must lie in (0, 1/2)");
  return (1.0 + std::sqrt(1.0 - 4.0 * gamma * gamma)) / (2.0 * gamma);
}

double gamma_of_c(double c) {
  if (!(c > 0.0)) throw OutOfRange("c must be positive");
  return 1.0 / (std::exp(c) + std::exp(-c));
}

ThreeIntervalResult three_interval_bound(const std::vector<double>& x, double gamma,
                                         double slack) {
  ThreeIntervalResult r;
  r.xi = growth_factor(gamma);
  for (double v : x)
    if (!(v >= 0.0)) throw OutOfRange("sequence entries must be nonnegative");
  const int n = static_cast<int>(x.size()) - 1;
  for (int k = 1; k < n; ++k)
    if (x[k] > gamma * (x[k - 1] + x[k + 1]) + slack) r.violations.push_back(k);
  r.hypothesis_holds = r.violations.empty();
  if (!r.hypothesis_holds || n < 0) return r;

  r.bounds.resize(n + 1);
  r.bound_holds = true;
  for (int k = 0; k <= n; ++k) {
    r.bounds(k) = x[0] * std::pow(r.xi, -k) + x[n] * std::pow(r.xi, -(n - k));
    if (x[k] > r.bounds(k) + slack) {
      r.bound_holds = false;
      r.bound_failures.push_back(k);
    }
  }
  return r;
}

double CylinderField::slice_norm(const Mat& slice, double period) {
  return std::sqrt(slice.squaredNorm() * period / static_cast<double>(slice.cols()));
}

CylinderField solve_cylinder(const SpectralOperator& op, const Forcing& forcing, const Vec& zeta0,
                             const CylinderGrid& grid, const SpectralOptions& opts) {
  check_grid(op, forcing, zeta0, grid);
  const Spectrum spec = spectrum(op, opts);
  const Mat& v = spec.eigenvectors;
  const Vec a0 = v.transpose() * zeta0;
  const Vec ell = forcing.profile.size() == 0 ? Vec::Zero(a0.size()) : Vec(v.transpose() * forcing.profile);
  const double d0 = forcing.delta0;
  const double R = grid.R;

  const auto modes = a0.size();
  Mat amp(modes, grid.n_tau);
  for (Eigen::Index j = 0; j < modes; ++j) {
    const double lam = spec.eigenvalues(j);
    const double l = ell(j);
    for (int i = 0; i < grid.n_tau; ++i) {
      const double tau = R * i / (grid.n_tau - 1);
      double a;
      if (std::abs(lam) <= opts.kernel_tol) {
        a = a0(j) + (l == 0.0 ? 0.0 : l * (1.0 - std::exp(-d0 * tau)) / d0);
      } else if (lam < 0.0) {
        // Decaying branch: a(R) = 0.
        a = l == 0.0 ? 0.0
                     : l / (lam - d0) * (std::exp(-d0 * tau) - std::exp(-d0 * R + lam * (R - tau)));
      } else if (std::abs(lam - d0) <= 1e-12 * std::max(1.0, d0)) {
        a = (a0(j) + l * tau) * std::exp(-lam * tau);
      } else {
        const double p = l / (lam - d0);
        a = (a0(j) - p) * std::exp(-lam * tau) + p * std::exp(-d0 * tau);
      }
      amp(j, i) = a;
    }
  }
  return assemble(op, grid, v * amp);
}

CylinderField solve_cylinder_cn(const SpectralOperator& op, const std::function<Mat(double)>& p,
                                const Forcing& forcing, const Vec& zeta0, const CylinderGrid& grid) {
  check_grid(op, forcing, zeta0, grid);
  const auto dim = op.matrix.rows();
  auto a_at = [&](double tau) -> Mat { return p ? Mat(op.matrix + p(tau)) : op.matrix; };
  {
    const Mat a0 = a_at(0.0);
    Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (a0 + a0.transpose()), Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-8)
      throw HypothesisViolated("forward march needs a nonnegative operator (min eigenvalue " +
                               std::to_string(eig.eigenvalues().minCoeff()) + ")");
  }
  const double dt = grid.R / (grid.n_tau - 1);
  const Mat id = Mat::Identity(dim, dim);
  auto forcing_at = [&](double tau) -> Vec {
    if (forcing.profile.size() == 0) return Vec::Zero(dim);
    return std::exp(-forcing.delta0 * tau) * forcing.profile;
  };

  Mat coeffs(dim, grid.n_tau);
  coeffs.col(0) = zeta0;
  Eigen::PartialPivLU<Mat> lu;
  if (!p) lu.compute(id + 0.5 * dt * op.matrix);
  Mat a_prev = a_at(0.0);
  for (int i = 1; i < grid.n_tau; ++i) {
    const double t0 = dt * (i - 1);
    const double t1 = dt * i;
    const Mat a_next = p ? a_at(t1) : a_prev;
    if (p) lu.compute(id + 0.5 * dt * a_next);
    const Vec rhs = coeffs.col(i - 1) - 0.5 * dt * (a_prev * coeffs.col(i - 1)) +
                    0.5 * dt * (forcing_at(t0) + forcing_at(t1));
    coeffs.col(i) = lu.solve(rhs);
    a_prev = a_next;
  }
  return assemble(op, grid, coeffs);
}

DecayFit decay_rate(const std::vector<double>& taus, const std::vector<double>& norms,
                    const DecayOptions& opts) {
  if (taus.size() != norms.size() || taus.empty())
    throw InsufficientDecay("decay fit needs matching, nonempty samples");
  const double initial = norms.front();
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < norms.size(); ++i)
    if (norms[i] > opts.floor && norms[i] < 0.1 * initial) idx.push_back(i);

  DecayFit fit;
  if (static_cast<int>(idx.size()) < opts.min_points && opts.tail_fallback) {
    bool ever_decayed = false;
    for (double n : norms) ever_decayed = ever_decayed || n < 0.1 * initial;
    if (!ever_decayed) {
      idx.clear();
      const double half = 0.5 * taus.back();
      for (std::size_t i = 0; i < norms.size(); ++i)
        if (taus[i] >= half && norms[i] > opts.floor) idx.push_back(i);
      fit.tail_window = true;
    }
  }
  if (static_cast<int>(idx.size()) < opts.min_points)
    throw InsufficientDecay("only " + std::to_string(idx.size()) + " slices in the fit window");

  const auto n = static_cast<Eigen::Index>(idx.size());
  Mat a(n, 2);
  Vec y(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    a(r, 0) = 1.0;
    a(r, 1) = taus[idx[r]];
    y(r) = std::log(norms[idx[r]]);
  }
  const Vec c = a.colPivHouseholderQr().solve(y);
  const Vec res = y - a * c;
  const double ss_tot = (y.array() - y.mean()).square().sum();
  fit.intercept = c(0);
  fit.delta_hat = -c(1);
  fit.r_squared = ss_tot > 0.0 ? 1.0 - res.squaredNorm() / ss_tot : 1.0;
  fit.window_begin = taus[idx.front()];
  fit.window_end = taus[idx.back()];
  fit.count = static_cast<int>(n);
  return fit;
}

DecayFit decay_rate(const CylinderField& field, const DecayOptions& opts) {
  return decay_rate(field.taus, field.slice_norms, opts);
}

Vec FlatTorusModel::log(const Vec& a, const Vec& b) const {
  Vec d = b - a;
  for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = wrap_difference(d(i), periods(i));
  return d;
}

FlatTorusModel flat_torus_model() {
  FlatTorusModel m;
  m.periods = Vec::Ones(2);
  m.theta = Vec::Unit(2, 0);
  m.x = Vec::Unit(2, 0);
  m.normal_dim = 1;
  return m;
}

CenterOfMassResult center_of_mass(const FlatTorusModel& model, const std::vector<Vec>& loop,
                                  double period, const CenterOfMassOptions& opts) {
  const int d = model.dim_q();
  const int r = model.normal_dim;
  const int n = static_cast<int>(loop.size());
  if (n < 5) throw ResolutionTooCoarse("center of mass needs at least 5 loop samples");

  // C¹ size of the normal part, derivative by periodic fourth-order differences.
  double normal = 0.0;
  double normal_dot = 0.0;
  if (r > 0) {
    for (int j = 0; j < n; ++j) {
      auto at = [&](int k) { return Vec(loop[((k % n) + n) % n].tail(r)); };
      const Vec dv = (-at(j + 2) + 8.0 * at(j + 1) - 8.0 * at(j - 1) + at(j - 2)) * (n / 12.0);
      normal = std::max(normal, at(j).norm());
      normal_dot = std::max(normal_dot, dv.norm());
    }
  }
  if (normal + normal_dot > model.tube_radius)
    throw OutsideTube("loop leaves the tube around the Reeb locus", normal + normal_dot);

  CenterOfMassResult out;
  out.m = loop.front().head(d);
  Vec u = Vec::Zero(n);
  const double tx = model.theta.dot(model.x);

  auto errors = [&](const Vec& m, const Vec& uu) {
    std::vector<Vec> e(n);
    for (int j = 0; j < n; ++j) {
      const double h = static_cast<double>(j) / n + uu(j);
      e[j] = model.log(m, Vec(loop[j].head(d) - period * h * model.x));
    }
    return e;
  };
  auto residual = [&](const std::vector<Vec>& e, const Vec& uu) {
    Vec f(d + n + 1);
    Vec mean = Vec::Zero(d);
    for (const Vec& ej : e) mean += ej;
    f.head(d) = mean / n;
    for (int j = 0; j < n; ++j) f(d + j) = model.theta.dot(e[j]);
    f(d + n) = uu.mean();
    return f;
  };

  Mat jac = Mat::Zero(d + n + 1, d + n);
  jac.topLeftCorner(d, d) = -Mat::Identity(d, d);
  for (int j = 0; j < n; ++j) {
    jac.block(0, d + j, d, 1) = -period * model.x / n;
    jac.block(d + j, 0, 1, d) = -model.theta.transpose();
    jac(d + j, d + j) = -period * tx;
    jac(d + n, d + j) = 1.0 / n;
  }
  const Eigen::ColPivHouseholderQR<Mat> qr(jac);

  Vec f = residual(errors(out.m, u), u);
  out.history.push_back(f.cwiseAbs().maxCoeff());
  while (out.history.back() > 0.1 * opts.tol && out.iterations < opts.max_iterations) {
    const Vec step = qr.solve(-f);
    out.m += step.head(d);
    u += step.tail(n);
    for (int i = 0; i < d; ++i)
      if (model.periods(i) > 0.0) out.m(i) -= model.periods(i) * std::floor(out.m(i) / model.periods(i));
    // Monotonicity projection on h.
    for (int j = 1; j < n; ++j) {
      const double prev = static_cast<double>(j - 1) / n + u(j - 1);
      const double cur = static_cast<double>(j) / n + u(j);
      if (cur <= prev) u(j) = prev + 1e-12 - static_cast<double>(j) / n;
    }
    ++out.iterations;
    f = residual(errors(out.m, u), u);
    out.history.push_back(f.cwiseAbs().maxCoeff());
  }

  const std::vector<Vec> e = errors(out.m, u);
  Vec mean = Vec::Zero(d);
  double deviation = 0.0;
  for (const Vec& ej : e) {
    mean += ej;
    out.xi_residual = std::max(out.xi_residual, std::abs(model.theta.dot(ej)));
    deviation = std::max(deviation, ej.norm());
  }
  out.mean_residual = (mean / n).norm();
  out.h.resize(n);
  for (int j = 0; j < n; ++j) out.h(j) = static_cast<double>(j) / n + u(j);
  out.tube_distance = normal + normal_dot + deviation;

  if (out.mean_residual > opts.tol || out.xi_residual > opts.tol)
    throw NoConvergence("center of mass", out.iterations,
                        std::max(out.mean_residual, out.xi_residual), out.history);
  if (out.tube_distance > model.tube_radius)
    throw OutsideTube("loop is not C¹-close to a Reeb orbit", out.tube_distance);
  return out;
}

Vec mean_zero_check(const TimeMatrixFn& flow_derivative, const std::vector<Vec>& zeta,
                    double period) {
  const auto n = zeta.size();
  Vec sum = Vec::Zero(zeta.front().size());
  for (std::size_t j = 0; j < n; ++j) {
    const Mat dphi = flow_derivative(period * static_cast<double>(j) / n);
    sum += dphi.partialPivLu().solve(zeta[j]);
  }
  return sum / static_cast<double>(n);
}

ActionCharge action_charge(const std::vector<std::vector<Vec>>& w, double R,
                           const ContactChart& chart, const MatrixFn& metric) {
  const int nt_tau = static_cast<int>(w.size());
  const int n_t = static_cast<int>(w.front().size());
  if (nt_tau < 3 || n_t < 5) throw ResolutionTooCoarse("action needs at least 3 × 5 samples");
  const double dtau = R / (nt_tau - 1);
  const double dt = 1.0 / n_t;

  auto d_t = [&](int i, int j) {
    const Vec& c = w[i][j];
    auto at = [&](int k) { return chart.displacement(c, w[i][((k % n_t) + n_t) % n_t]); };
    return Vec((-at(j + 2) + 8.0 * at(j + 1) - 8.0 * at(j - 1) + at(j - 2)) / (12.0 * dt));
  };
  auto d_tau = [&](int i, int j) {
    auto disp = [&](int a, int b) { return chart.displacement(w[a][j], w[b][j]); };
    if (i == 0) return Vec((4.0 * disp(0, 1) - disp(0, 2)) / (2.0 * dtau));
    if (i == nt_tau - 1) return Vec((disp(i - 2, i) - 4.0 * disp(i - 1, i)) / (2.0 * dtau));
    return Vec(disp(i - 1, i + 1) / (2.0 * dtau));
  };
  auto sq = [&](const Vec& v, const Vec& x) {
    return metric ? v.dot(metric(x) * v) : v.squaredNorm();
  };

  ActionCharge out;
  for (int i = 0; i < nt_tau; ++i) {
    const double wt = (i == 0 || i == nt_tau - 1) ? 0.5 * dtau : dtau;
    double row = 0.0;
    for (int j = 0; j < n_t; ++j) {
      const Vec& x = w[i][j];
      const Vec a = project_xi(chart, d_tau(i, j), x);
      const Vec b = project_xi(chart, d_t(i, j), x);
      row += (sq(a, x) + sq(b, x)) * dt;
    }
    out.pi_energy += 0.5 * wt * row;
  }
  double boundary = 0.0;
  double charge = 0.0;
  for (int j = 0; j < n_t; ++j) {
    const Vec lam = chart.lambda(w[0][j]);
    boundary += lam.dot(d_t(0, j)) * dt;
    charge -= lam.dot(d_tau(0, j)) * dt;
  }
  out.action = out.pi_energy + boundary;
  out.charge = charge;
  return out;
}

}  // namespace contactlab
