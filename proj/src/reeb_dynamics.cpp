#include "contactlab/reeb_dynamics.hpp"

#include <algorithm>
#include <cmath>

#include <boost/numeric/odeint.hpp>

#include "contactlab/errors.hpp"
#include "contactlab/parallel.hpp"

namespace contactlab {

namespace odeint = boost::numeric::odeint;
using State = std::vector<double>;

namespace {

constexpr double kFieldStep = 1e-3;

Vec to_vec(const State& s, std::size_t offset, int n) {
  return Eigen::Map<const Vec>(s.data() + offset, n);
}

struct ReebRhs {
  const ContactChart* chart;
  double* max_residual;

  Vec field(const Vec& x) const {
    if (!chart->in_domain(x)) throw LeftChartDomain("trajectory left the domain of '" + chart->name() + "'");
    const ReebSolve r = solve_reeb(*chart, x);
    if (max_residual) *max_residual = std::max(*max_residual, r.residual);
    return r.field;
  }
};

// Integrates `sys` and calls obs(state, t) at each entry of `times`.
template <class System, class Observer>
void integrate_sampled(System sys, State& state, const std::vector<double>& times,
                       const IntegratorOptions& opts, Observer obs) {
  const double span = times.back() - times.front();
  if (opts.method == IntegratorOptions::Method::kRK45) {
    const double dt = span == 0.0 ? 1e-3 : span / 100.0;
    odeint::integrate_times(
        odeint::make_controlled(opts.atol, opts.rtol, odeint::runge_kutta_dopri5<State>()), sys,
        state, times.begin(), times.end(), dt, obs);
  } else {
    const double dt = span == 0.0 ? 1e-3 : span / std::max(1, opts.rk4_steps);
    odeint::integrate_times(odeint::runge_kutta4<State>(), sys, state, times.begin(), times.end(),
                            dt, obs);
  }
}

// With an explicit winding the loop has to close in the universal cover,
// y − x = winding·periods; otherwise periodic coordinates close modulo their
// period.
Vec closure_defect(const ContactChart& chart, const Vec& x, const Vec& y, const Vec& winding) {
  if (winding.size() == 0) return chart.displacement(x, y);
  return y - x - winding.cwiseProduct(chart.periods());
}

Vec realized_winding(const ContactChart& chart, const Vec& x, const Vec& y) {
  Vec w = Vec::Zero(chart.dim());
  for (int i = 0; i < chart.dim(); ++i) {
    const double p = chart.periods()(i);
    if (p > 0.0) w(i) = std::round((y(i) - x(i)) / p);
  }
  return w;
}

}  // namespace

Trajectory flow(const ContactChart& chart, const Vec& x0, double t, int steps,
                const IntegratorOptions& opts) {
  if (steps < 1) steps = 1;
  Trajectory traj;
  const int d = chart.dim();
  ReebRhs rhs{&chart, &traj.max_reeb_residual};
  auto sys = [&](const State& s, State& ds, double) {
    const Vec v = rhs.field(to_vec(s, 0, d));
    std::copy(v.data(), v.data() + d, ds.begin());
  };
  State state(x0.data(), x0.data() + d);
  std::vector<double> times(steps + 1);
  for (int i = 0; i <= steps; ++i) times[i] = t * static_cast<double>(i) / steps;
  integrate_sampled(sys, state, times, opts, [&](const State& s, double time) {
    traj.times.push_back(time);
    traj.points.push_back(to_vec(s, 0, d));
  });
  for (const Vec& p : traj.points) {
    const Vec v = solve_reeb(chart, p).field;
    traj.max_action_defect = std::max(traj.max_action_defect, std::abs(chart.lambda(p).dot(v) - 1.0));
  }
  return traj;
}

Vec flow_point(const ContactChart& chart, const Vec& x0, double t, const IntegratorOptions& opts) {
  return flow(chart, x0, t, 1, opts).points.back();
}

VariationalFlow flow_with_derivative(const ContactChart& chart, const Vec& x0, double t,
                                     const IntegratorOptions& opts) {
  const int d = chart.dim();
  ReebRhs rhs{&chart, nullptr};
  const VectorFn field = [&rhs](const Vec& x) { return rhs.field(x); };
  auto sys = [&](const State& s, State& ds, double) {
    const Vec x = to_vec(s, 0, d);
    const Vec v = rhs.field(x);
    const Mat jac = jacobian4(field, x, kFieldStep);
    const Mat phi = Eigen::Map<const Mat>(s.data() + d, d, d);
    const Mat dphi = jac * phi;
    std::copy(v.data(), v.data() + d, ds.begin());
    std::copy(dphi.data(), dphi.data() + d * d, ds.begin() + d);
  };
  State state(d + d * d, 0.0);
  std::copy(x0.data(), x0.data() + d, state.begin());
  for (int i = 0; i < d; ++i) state[d + i * d + i] = 1.0;
  const std::vector<double> times{0.0, t};
  VariationalFlow out;
  integrate_sampled(sys, state, times, opts, [&](const State& s, double) {
    out.end = to_vec(s, 0, d);
    out.monodromy = Eigen::Map<const Mat>(s.data() + d, d, d);
  });
  return out;
}

ReebOrbit find_closed_orbit(const ContactChart& chart, const Vec& guess, double period_guess,
                            const ShootingOptions& opts) {
  const int d = chart.dim();
  const Vec normal = reeb_field(chart, guess).normalized();
  const int n_eq = d + 1 + static_cast<int>(opts.constraints.size());

  Vec x = guess;
  double period = period_guess;
  std::vector<double> history;

  auto residual = [&](const Vec& y, double tt, VariationalFlow* vf) {
    VariationalFlow local = flow_with_derivative(chart, y, tt, opts.integrator);
    Vec f(n_eq);
    f.head(d) = closure_defect(chart, y, local.end, opts.winding);
    f(d) = normal.dot(chart.displacement(guess, y));
    for (std::size_t c = 0; c < opts.constraints.size(); ++c) {
      const auto& [point, dir] = opts.constraints[c];
      f(d + 1 + static_cast<int>(c)) = dir.dot(chart.displacement(point, y));
    }
    if (vf) *vf = std::move(local);
    return f;
  };

  VariationalFlow vf;
  Vec f = residual(x, period, &vf);
  double fnorm = f.norm();
  history.push_back(fnorm);
  int it = 0;
  for (; it < opts.max_iterations && fnorm > opts.newton_tol; ++it) {
    Mat jac = Mat::Zero(n_eq, d + 1);
    jac.topLeftCorner(d, d) = vf.monodromy - Mat::Identity(d, d);
    jac.topRightCorner(d, 1) = reeb_field(chart, vf.end);
    jac.block(d, 0, 1, d) = normal.transpose();
    for (std::size_t c = 0; c < opts.constraints.size(); ++c)
      jac.block(d + 1 + static_cast<int>(c), 0, 1, d) = opts.constraints[c].second.transpose();
    const Vec step = jac.completeOrthogonalDecomposition().solve(-f);

    // backtracking on the residual norm
    double scale = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 12; ++ls, scale *= 0.5) {
      const Vec xt = x + scale * step.head(d);
      const double tt = period + scale * step(d);
      if (!(tt > 0.05 * period_guess)) continue;
      VariationalFlow trial;
      Vec ft;
      try {
        ft = residual(xt, tt, &trial);
      } catch (const NumericalError&) {
        continue;
      }
      if (ft.norm() < fnorm * (1.0 - 1e-4 * scale) || ft.norm() <= opts.newton_tol) {
        x = xt;
        period = tt;
        vf = std::move(trial);
        f = ft;
        fnorm = ft.norm();
        accepted = true;
        break;
      }
    }
    history.push_back(fnorm);
    if (!accepted) break;
  }

  const double closure = f.head(d).norm();
  if (closure > opts.tol_orbit || fnorm > 10 * opts.tol_orbit) {
    throw NoConvergence("closed-orbit shooting did not converge on '" + chart.name() + "'", it,
                        fnorm, history);
  }

  ReebOrbit orbit;
  orbit.period = period;
  orbit.base_point = x;
  orbit.winding = opts.winding.size() == 0 ? realized_winding(chart, x, vf.end) : opts.winding;
  orbit.closure_residual = closure;
  orbit.iterations = it;
  orbit.xi_frame = xi_frame(chart, x);
  const int ns = std::max(4, opts.n_samples);
  const Trajectory traj = flow(chart, x, period, ns, opts.integrator);
  orbit.samples.assign(traj.points.begin(), traj.points.end() - 1);
  return orbit;
}

double orbit_action(const ContactChart& chart, const ReebOrbit& orbit) {
  const int n = static_cast<int>(orbit.samples.size());
  // unwrap into a continuous lift, then remove the linear drift
  std::vector<Vec> lift(n);
  lift[0] = orbit.samples[0];
  for (int j = 1; j < n; ++j) lift[j] = lift[j - 1] + chart.displacement(orbit.samples[j - 1], orbit.samples[j]);
  const Vec drift = lift[n - 1] + chart.displacement(orbit.samples[n - 1], orbit.samples[0]) - lift[0];
  const double h = 1.0 / n;
  // lift(t) − t·drift is 1-periodic
  auto periodic = [&](int j) -> Vec {
    const int k = ((j % n) + n) % n;
    return lift[k] - (static_cast<double>(k) * h) * drift;
  };
  double action = 0.0;
  for (int j = 0; j < n; ++j) {
    const Vec dp = (-periodic(j + 2) + 8.0 * periodic(j + 1) - 8.0 * periodic(j - 1) + periodic(j - 2)) /
                   (12.0 * h);
    action += chart.lambda(orbit.samples[j]).dot(dp + drift);
  }
  return action * h;
}

ReturnMap return_map(const ContactChart& chart, const ReebOrbit& orbit, const IntegratorOptions& opts,
                     double tol) {
  const VariationalFlow vf = flow_with_derivative(chart, orbit.base_point, orbit.period, opts);
  const Mat& f = orbit.xi_frame;
  const Vec reeb = reeb_field(chart, orbit.base_point);
  const Vec lam = chart.lambda(orbit.base_point);
  const Mat image = vf.monodromy * f;
  const Mat projected = image - reeb * (lam.transpose() * image);
  ReturnMap rm;
  rm.matrix = f.transpose() * projected;
  rm.omega = f.transpose() * chart.dlambda(orbit.base_point) * f;
  rm.symplectic_defect = (rm.matrix.transpose() * rm.omega * rm.matrix - rm.omega).cwiseAbs().maxCoeff();
  rm.eigenvalues = Eigen::EigenSolver<Mat>(rm.matrix).eigenvalues();
  rm.unit_eigen_dim = 0;
  for (Eigen::Index i = 0; i < rm.eigenvalues.size(); ++i)
    if (std::abs(rm.eigenvalues(i) - 1.0) <= tol) ++rm.unit_eigen_dim;
  return rm;
}

OrbitClass classify_matrix(const Mat& psi, double tol) {
  const CVec ev = Eigen::EigenSolver<Mat>(psi).eigenvalues();
  int k = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (std::abs(ev(i) - 1.0) <= tol) ++k;
  if (k == 0) return Nondegenerate{};
  return MorseBottCandidate{k};
}

OrbitClass classify_orbit(const ReturnMap& rm, double tol) { return classify_matrix(rm.matrix, tol); }

FamilyReport orbit_family_scan(const ContactChart& chart, const ReebOrbit& seed,
                               const std::vector<Vec>& directions, int n_samples, double step,
                               const ShootingOptions& opts) {
  FamilyReport report;
  report.seed_period = seed.period;
  const std::size_t total = directions.size() * static_cast<std::size_t>(n_samples);
  report.samples.resize(total);
  parallel_for(total, [&](std::size_t idx) {
    FamilySample& s = report.samples[idx];
    s.direction = static_cast<int>(idx / n_samples);
    s.index = static_cast<int>(idx % n_samples) + 1;
    s.offset = s.index * step;
    const Vec guess = seed.base_point + s.offset * directions[s.direction];
    ShootingOptions local = opts;
    local.winding = seed.winding;
    for (const Vec& dir : directions) local.constraints.emplace_back(guess, dir);
    try {
      const ReebOrbit orbit = find_closed_orbit(chart, guess, seed.period, local);
      s.converged = true;
      s.period = orbit.period;
      s.closure_residual = orbit.closure_residual;
      s.point = orbit.base_point;
    } catch (const NoConvergence& e) {
      s.failure = "NoConvergence";
      s.closure_residual = e.residual();
      s.point = guess;
    } catch (const NumericalError& e) {
      s.failure = e.what();
      s.point = guess;
    }
  });
  for (const auto& s : report.samples) {
    if (!s.converged) continue;
    ++report.converged;
    report.max_period_deviation = std::max(report.max_period_deviation, std::abs(s.period - seed.period));
  }
  return report;
}

}  // namespace contactlab
