#include "contactlab/scenario.hpp"

#include <cxxabi.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <typeinfo>
#include <variant>

#include "contactlab/contact_core.hpp"
#include "contactlab/decay_lab.hpp"
#include "contactlab/errors.hpp"
#include "contactlab/models.hpp"
#include "contactlab/normal_form.hpp"
#include "contactlab/parallel.hpp"
#include "contactlab/reeb_dynamics.hpp"
#include "contactlab/rng.hpp"
#include "contactlab/spectral.hpp"

namespace contactlab {

using nlohmann::json;
using std::numbers::pi;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Reads params with defaults and range checks, recording the effective values.
class Params {
 public:
  Params(const json& in, std::string kind) : in_(in), kind_(std::move(kind)) {
    if (!in_.is_object()) throw ConfigError("params must be an object");
  }

  bool has(const std::string& key) const { return in_.contains(key); }

  double number(const std::string& key, double def, double lo = -kInf, double hi = kInf) {
    double v = def;
    if (const json* j = take(key)) {
      if (!j->is_number()) fail(key, "expected a number");
      v = j->get<double>();
    }
    if (!std::isfinite(v) || v < lo || v > hi) fail(key, range_text(lo, hi));
    out_[key] = v;
    return v;
  }

  int integer(const std::string& key, int def, int lo, int hi) {
    long v = def;
    if (const json* j = take(key)) {
      if (!j->is_number_integer()) fail(key, "expected an integer");
      v = j->get<long>();
    }
    if (v < lo || v > hi) fail(key, range_text(lo, hi));
    out_[key] = v;
    return static_cast<int>(v);
  }

  bool flag(const std::string& key, bool def) {
    bool v = def;
    if (const json* j = take(key)) {
      if (!j->is_boolean()) fail(key, "expected true or false");
      v = j->get<bool>();
    }
    out_[key] = v;
    return v;
  }

  std::string choice(const std::string& key, const std::string& def,
                     const std::vector<std::string>& allowed) {
    std::string v = def;
    if (const json* j = take(key)) {
      if (!j->is_string()) fail(key, "expected a string");
      v = j->get<std::string>();
    }
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
      std::string msg = "must be one of";
      for (const auto& a : allowed) msg += " " + a;
      fail(key, msg);
    }
    out_[key] = v;
    return v;
  }

  std::vector<double> numbers(const std::string& key, const std::vector<double>& def,
                              std::size_t min_size = 0, std::size_t max_size = 1 << 20) {
    std::vector<double> v = def;
    if (const json* j = take(key)) {
      if (!j->is_array()) fail(key, "expected an array of numbers");
      v.clear();
      for (const auto& e : *j) {
        if (!e.is_number()) fail(key, "expected an array of numbers");
        v.push_back(e.get<double>());
      }
    }
    for (double d : v)
      if (!std::isfinite(d)) fail(key, "entries must be finite");
    if (v.size() < min_size || v.size() > max_size)
      fail(key, "expected between " + std::to_string(min_size) + " and " +
                    std::to_string(max_size) + " entries");
    out_[key] = v;
    return v;
  }

  std::vector<int> integers(const std::string& key, const std::vector<int>& def, int lo, int hi) {
    std::vector<int> v = def;
    if (const json* j = take(key)) {
      if (!j->is_array() || j->empty()) fail(key, "expected a nonempty array of integers");
      v.clear();
      for (const auto& e : *j) {
        if (!e.is_number_integer()) fail(key, "expected a nonempty array of integers");
        v.push_back(e.get<int>());
      }
    }
    for (int d : v)
      if (d < lo || d > hi) fail(key, range_text(lo, hi));
    out_[key] = v;
    return v;
  }

  // Square matrix given as rows; empty if absent.
  Mat matrix(const std::string& key) {
    const json* j = take(key);
    if (!j) return {};
    if (!j->is_array() || j->empty()) fail(key, "expected a square array of rows");
    const auto n = static_cast<Eigen::Index>(j->size());
    Mat m(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const json& row = (*j)[static_cast<std::size_t>(r)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
        fail(key, "expected a square array of rows");
      for (Eigen::Index c = 0; c < n; ++c) {
        if (!row[static_cast<std::size_t>(c)].is_number()) fail(key, "entries must be numbers");
        m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
      }
    }
    if (!m.allFinite()) fail(key, "entries must be finite");
    out_[key] = *j;
    return m;
  }

  std::optional<double> optional_number(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return number(key, 0.0);
  }

  // Rejects keys that were never read.
  json finish() const {
    for (const auto& [k, v] : in_.items())
      if (!seen_.count(k))
        throw ConfigError("unknown parameter '" + k + "' for kind '" + kind_ + "'");
    return out_;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    throw ConfigError("params." + key + ": " + why);
  }

 private:
  const json* take(const std::string& key) {
    seen_.insert(key);
    auto it = in_.find(key);
    return it == in_.end() ? nullptr : &*it;
  }

  static std::string range_text(double lo, double hi) {
    std::ostringstream os;
    os << "out of range [" << lo << ", " << hi << "]";
    return os.str();
  }

  const json& in_;
  std::string kind_;
  std::set<std::string> seen_;
  json out_ = json::object();
};

template <class Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void verdict(Report& rep, std::string name, bool pass, double value, double tol,
             std::string detail = {}, long index = -1) {
  rep.verdicts.push_back({std::move(name), pass, value, tol, std::move(detail), index});
}

// Verdict "value < tol" from per-sample values, naming the worst sample on failure.
void max_verdict(Report& rep, const std::string& name, const std::vector<double>& values,
                 double tol, const std::string& what = "sample") {
  double worst = 0.0;
  long at = -1;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!(values[i] <= worst)) {  // NaN counts as worst
      worst = values[i];
      at = static_cast<long>(i);
      if (std::isnan(worst)) break;
    }
  const bool pass = worst < tol;
  verdict(rep, name, pass, worst, tol,
          pass ? std::string{} : "worst at " + what + " " + std::to_string(at),
          pass ? -1 : at);
}

Mat dx_dy(int k) { return -standard_complex_structure(2 * k); }

HessianData constant_hessian(const Mat& s) {
  return HessianData::from_symmetric(static_cast<int>(s.rows()), [s](double) { return s; });
}

// Galerkin coefficients of a constant section.
Vec constant_section(const SpectralOperator& op, const Vec& v) {
  Vec c = Vec::Zero(op.matrix.rows());
  for (int a = 0; a < op.rank; ++a) c(a * op.basis_size()) = v(a) * std::sqrt(op.period);
  return c;
}

// ---------------------------------------------------------------- dual_checks

void run_dual_checks(const Scenario& s, Params& p, Report& rep) {
  const std::vector<int> dims = p.integers("dims", {1, 2, 3}, 1, 6);
  const int samples = p.integer("samples", 1000, 1, 1000000);
  const double box = p.number("box", 1.0, 0.0, 10.0);
  const bool conformal = p.flag("include_conformal", true);
  const double tol = p.number("tol", 1e-9, 0.0);
  const double formula_tol = p.number("formula_tol", 1e-12, 0.0);
  rep.params = p.finish();

  std::vector<ContactChart> charts;
  for (int n : dims) charts.push_back(models::darboux(n));
  if (conformal) charts.push_back(models::exp_scaled_darboux());

  const CounterRng root(s.seed);
  Table rt{{"chart", "dim", "max_flat_sharp", "max_sharp_flat"}, {}};
  Table ft{{"n", "max_formula_gap", "max_solve_residual"}, {}};
  std::vector<double> all_rt, all_formula;
  for (std::size_t c = 0; c < charts.size(); ++c) {
    const ContactChart& chart = charts[c];
    const bool darboux = c < dims.size();
    std::vector<double> e1(samples), e2(samples), e3(samples, 0.0), res(samples, 0.0);
    parallel_for(static_cast<std::size_t>(samples), [&](std::size_t i) {
      CounterRng rng = root.split(c).split(i);
      const Vec x = rng.uniform_vec(chart.dim(), -box, box);
      const Vec v = rng.normal_vec(chart.dim());
      const Vec alpha = rng.normal_vec(chart.dim());
      e1[i] = max_abs(flat_dual(chart, sharp_dual(chart, v, x), x) - v);
      e2[i] = max_abs(sharp_dual(chart, flat_dual(chart, alpha, x), x) - alpha);
      if (darboux) {
        const int n = chart.n();
        const Vec a = alpha.head(n), b = alpha.segment(n, n);
        double r = 0.0;
        const Vec flat = flat_dual(chart, alpha, x, &r);
        e3[i] = max_abs(flat - models::darboux_flat_formula(n, alpha(2 * n), a, b, x));
        res[i] = r;
      }
    });
    for (int i = 0; i < samples; ++i) all_rt.push_back(std::max(e1[i], e2[i]));
    rt.rows.push_back({static_cast<double>(c), static_cast<double>(chart.dim()),
                       *std::max_element(e1.begin(), e1.end()),
                       *std::max_element(e2.begin(), e2.end())});
    if (darboux) {
      all_formula.insert(all_formula.end(), e3.begin(), e3.end());
      ft.rows.push_back({static_cast<double>(chart.n()), *std::max_element(e3.begin(), e3.end()),
                         *std::max_element(res.begin(), res.end())});
    }
  }
  rep.tables["round_trip"] = rt;
  rep.tables["formula"] = ft;
  rep.scalars["samples_per_chart"] = samples;
  rep.scalars["charts"] = static_cast<double>(charts.size());
  max_verdict(rep, "round_trip", all_rt, tol);
  max_verdict(rep, "darboux_formula", all_formula, formula_tol);
}

// -------------------------------------------------------------- perturbed_reeb

void run_perturbed_reeb(const Scenario& s, Params& p, Report& rep) {
  const std::vector<int> dims = p.integers("dims", {1, 2}, 1, 4);
  const int samples = p.integer("samples", 200, 1, 100000);
  const double box = p.number("box", 1.0, 0.0, 5.0);
  const double tol = p.number("tol", 1e-8, 0.0);
  rep.params = p.finish();

  const CounterRng root(s.seed);
  Table t{{"n", "sample", "formula_gap", "reeb_defect", "dg_consistency"}, {}};
  std::vector<double> gaps, defects, consistency;
  for (std::size_t d = 0; d < dims.size(); ++d) {
    const ContactChart base = models::darboux(dims[d]);
    std::vector<std::array<double, 3>> out(samples);
    parallel_for(static_cast<std::size_t>(samples), [&](std::size_t i) {
      CounterRng rng = root.split(d).split(i);
      const PerturbationData pert = models::random_polynomial_perturbation(rng, base.dim());
      const ContactChart scaled = conformal_chart(base, pert);
      const Vec x = rng.uniform_vec(base.dim(), -box, box);
      const Vec formula = perturbed_reeb(base, pert, x);
      const double defect = std::max(std::abs(scaled.lambda(x).dot(formula) - 1.0),
                                     max_abs(Vec(scaled.dlambda(x).transpose() * formula)));
      out[i] = {max_abs(formula - reeb_field(scaled, x)), defect, pert.dg_consistency(x)};
    });
    for (int i = 0; i < samples; ++i) {
      t.rows.push_back({static_cast<double>(dims[d]), static_cast<double>(i), out[i][0], out[i][1],
                        out[i][2]});
      gaps.push_back(out[i][0]);
      defects.push_back(out[i][1]);
      consistency.push_back(out[i][2]);
    }
  }
  rep.tables["samples"] = t;
  max_verdict(rep, "formula_vs_direct_solve", gaps, tol);
  max_verdict(rep, "reeb_equations", defects, tol);
  max_verdict(rep, "dg_consistency", consistency, tol);
}

// ------------------------------------------------------- orbit and return_map

struct OrbitSetup {
  std::string model;
  double w0 = 1.0;
  std::vector<double> weights;
  ContactChart chart;
  Vec guess;
  double period_guess = 0.0;
  double expected_period = 0.0;
  ShootingOptions shooting;
};

OrbitSetup read_orbit_setup(Params& p) {
  const std::string model = p.choice("model", "ellipsoid", {"ellipsoid", "torus"});
  const bool ell = model == "ellipsoid";
  OrbitSetup o{model, 1.0, {}, ell ? models::weighted_ellipsoid(1.0, {1.0}) : models::torus(),
               {}, 0.0, 0.0, {}};
  if (ell) {
    o.w0 = p.number("w0", 1.0, 1e-3, 1e3);
    o.weights = p.numbers("weights", {1.41421356}, 1, 4);
    for (double w : o.weights)
      if (!(w > 0.0)) p.fail("weights", "must be positive");
    o.chart = models::weighted_ellipsoid(o.w0, o.weights);
  }
  const int dim = o.chart.dim();
  const double natural = ell ? 2.0 * pi / o.w0 : 1.0;
  o.guess = to_vec(p.numbers("guess", std::vector<double>(dim, 0.0), dim, dim));
  o.period_guess = p.number("period_guess", natural, 1e-6);
  o.expected_period = p.number("expected_period", natural, 0.0);
  const std::vector<double> winding =
      p.numbers("winding", ell ? std::vector<double>{} : std::vector<double>{1.0, 0.0, 0.0});
  if (!winding.empty() && static_cast<int>(winding.size()) != dim)
    p.fail("winding", "expected " + std::to_string(dim) + " entries");
  o.shooting.winding = to_vec(winding);
  o.shooting.n_samples = p.integer("samples", 256, 8, 1 << 16);
  o.shooting.tol_orbit = p.number("tol", 1e-8, 0.0);
  return o;
}

void run_orbit(const Scenario&, Params& p, Report& rep) {
  const OrbitSetup o = read_orbit_setup(p);
  rep.params = p.finish();
  const double tol = o.shooting.tol_orbit;

  const ReebOrbit orbit = find_closed_orbit(o.chart, o.guess, o.period_guess, o.shooting);
  const double action = orbit_action(o.chart, orbit);
  rep.scalars["period"] = orbit.period;
  rep.scalars["action"] = action;
  rep.scalars["closure_residual"] = orbit.closure_residual;
  rep.scalars["iterations"] = orbit.iterations;
  Table t{{"t"}, {}};
  for (int i = 0; i < o.chart.dim(); ++i) t.columns.push_back("x" + std::to_string(i));
  for (std::size_t j = 0; j < orbit.samples.size(); ++j) {
    std::vector<double> row{orbit.period * static_cast<double>(j) / orbit.samples.size()};
    for (int i = 0; i < o.chart.dim(); ++i) row.push_back(orbit.samples[j](i));
    t.rows.push_back(std::move(row));
  }
  rep.tables["orbit"] = t;

  verdict(rep, "closure", orbit.closure_residual < tol, orbit.closure_residual, tol);
  verdict(rep, "action_equals_period", std::abs(action - orbit.period) < tol,
          std::abs(action - orbit.period), tol);
  if (o.expected_period > 0.0)
    verdict(rep, "expected_period", std::abs(orbit.period - o.expected_period) < tol,
            std::abs(orbit.period - o.expected_period), tol);
}

void run_return_map(const Scenario&, Params& p, Report& rep) {
  const OrbitSetup o = read_orbit_setup(p);
  const double eigen_tol = p.number("eigen_tol", 1e-6, 0.0);
  const double class_tol = p.number("class_tol", 1e-6, 0.0);
  rep.params = p.finish();

  const ReebOrbit orbit = find_closed_orbit(o.chart, o.guess, o.period_guess, o.shooting);
  const ReturnMap rm = return_map(o.chart, orbit, {}, class_tol);
  const OrbitClass cls = classify_orbit(rm, class_tol);
  const int multiplicity =
      std::holds_alternative<MorseBottCandidate>(cls) ? std::get<MorseBottCandidate>(cls).multiplicity : 0;

  // Closed-form spectrum: rotation by w_j·T in each plane, identity on the torus.
  std::vector<std::complex<double>> expected;
  if (o.model == "ellipsoid") {
    for (double w : o.weights) {
      expected.push_back(std::polar(1.0, w * orbit.period));
      expected.push_back(std::polar(1.0, -w * orbit.period));
    }
  } else {
    expected.assign(static_cast<std::size_t>(rm.eigenvalues.size()), 1.0);
  }
  int expected_mult = 0;
  for (const auto& e : expected)
    if (std::abs(e - 1.0) < class_tol) ++expected_mult;

  double eig_err = 0.0;
  std::vector<bool> used(static_cast<std::size_t>(rm.eigenvalues.size()), false);
  for (const auto& e : expected) {
    double best = kInf;
    Eigen::Index at = -1;
    for (Eigen::Index i = 0; i < rm.eigenvalues.size(); ++i)
      if (!used[i] && std::abs(rm.eigenvalues(i) - e) < best) {
        best = std::abs(rm.eigenvalues(i) - e);
        at = i;
      }
    if (at >= 0) used[at] = true;
    eig_err = std::max(eig_err, best);
  }

  Table t{{"re", "im", "modulus", "angle"}, {}};
  for (Eigen::Index i = 0; i < rm.eigenvalues.size(); ++i)
    t.rows.push_back({rm.eigenvalues(i).real(), rm.eigenvalues(i).imag(),
                      std::abs(rm.eigenvalues(i)), std::arg(rm.eigenvalues(i))});
  rep.tables["eigenvalues"] = t;
  const double det = rm.matrix.determinant();
  rep.scalars["period"] = orbit.period;
  rep.scalars["determinant"] = det;
  rep.scalars["symplectic_defect"] = rm.symplectic_defect;
  rep.scalars["unit_eigen_dim"] = rm.unit_eigen_dim;
  rep.scalars["multiplicity"] = multiplicity;
  rep.scalars["expected_multiplicity"] = expected_mult;

  verdict(rep, "eigenvalues", eig_err < eigen_tol, eig_err, eigen_tol);
  if (o.model == "torus") {
    const double id_err = max_abs(rm.matrix - Mat::Identity(rm.matrix.rows(), rm.matrix.cols()));
    rep.scalars["identity_defect"] = id_err;
    verdict(rep, "identity", id_err < 1e-8, id_err, 1e-8);
  }
  verdict(rep, "symplectic", rm.symplectic_defect < eigen_tol, rm.symplectic_defect, eigen_tol);
  verdict(rep, "determinant", std::abs(det - 1.0) < 1e-8, std::abs(det - 1.0), 1e-8);
  verdict(rep, "classification", multiplicity == expected_mult, multiplicity, 0.0,
          multiplicity == 0 ? "nondegenerate"
                            : "Morse-Bott candidate of multiplicity " + std::to_string(multiplicity));
}

// ----------------------------------------------------------------- thickening

Vec random_tube_point(const ThickeningChart& tc, CounterRng& rng, double radius) {
  Vec x = Vec::Zero(tc.dim());
  x.head(tc.setup().dim_q()) = rng.uniform_vec(tc.setup().dim_q(), -1.0, 1.0);
  const int f = tc.dim() - tc.mu_offset();
  if (f > 0) {
    Vec v = rng.normal_vec(f);
    v *= radius * rng.uniform() / std::max(v.norm(), 1e-12);
    x.tail(f) = v;
  }
  return x;
}

void run_thickening(const Scenario& s, Params& p, Report& rep) {
  const std::string which = p.choice("setup", "mixed", {"circle", "torus", "mixed"});
  int m = 0, g = 0;
  if (which == "mixed") {
    m = p.integer("m", 1, 0, 3);
    g = p.integer("g", 1, 0, 2);
  }
  const int k = p.integer("k", 1, 0, 3);
  TubeOptions tube;
  tube.requested_radius = p.number("requested_radius", 0.5, 1e-6, 10.0);
  tube.search_radius = std::max(tube.search_radius, tube.requested_radius);
  const int samples = p.integer("samples", 100, 1, 100000);
  const double c = p.number("scale", 1.7, 1e-3, 100.0);
  const double tol = p.number("tol", 1e-8, 0.0);
  const double annihilation_tol = p.number("annihilation_tol", 1e-10, 0.0);
  const double fd_tol = p.number("fd_tol", 1e-6, 0.0);
  rep.params = p.finish();

  const MorseBottSetup setup =
      which == "circle" ? circle_setup() : which == "torus" ? torus_setup() : mixed_setup(m, g);
  const ThickeningChart tc = build_thickening(setup, dx_dy(k), tube);
  const int two_n = tc.dim() - 1;
  const double radius = tube.requested_radius;

  const CounterRng root(s.seed);
  std::vector<Vec> points(samples);
  std::vector<std::array<double, 4>> out(samples);
  parallel_for(static_cast<std::size_t>(samples), [&](std::size_t i) {
    CounterRng rng = root.split(i);
    const Vec q = rng.uniform_vec(setup.dim_q(), -1.0, 1.0);
    const double lift = max_abs(reeb_of_thickening(tc, q) - tc.lifted_x_theta(q));
    points[i] = random_tube_point(tc, rng, radius);
    const ContactSplitting sp = split_contact_distribution(tc, points[i]);
    out[i] = {lift, static_cast<double>(sp.rank), sp.annihilation,
              tc.dlambda_decomposition_error(points[i])};
  });
  const RadialReport radial = radial_identities(tc, c, points);

  Table t{{"sample", "reeb_lift_error", "splitting_rank", "annihilation", "decomposition_error"}, {}};
  std::vector<double> lift, rank_gap, ann, dec;
  for (int i = 0; i < samples; ++i) {
    t.rows.push_back({static_cast<double>(i), out[i][0], out[i][1], out[i][2], out[i][3]});
    lift.push_back(out[i][0]);
    rank_gap.push_back(std::abs(out[i][1] - two_n));
    ann.push_back(out[i][2]);
    dec.push_back(out[i][3]);
  }
  rep.tables["samples"] = t;
  rep.scalars["dim"] = tc.dim();
  rep.scalars["tube_radius"] = tc.tube_radius;
  rep.scalars["radial_scaling_error"] = radial.scaling_error;
  rep.scalars["radial_cartan_error"] = radial.cartan_error;

  verdict(rep, "tube_radius", tc.tube_radius >= radius, tc.tube_radius, radius,
          "verified radius must reach the requested one");
  max_verdict(rep, "reeb_on_zero_section", lift, tol);
  max_verdict(rep, "splitting_rank", rank_gap, 0.5);
  max_verdict(rep, "splitting_in_kernel", ann, annihilation_tol);
  max_verdict(rep, "dlambda_decomposition", dec, fd_tol);
  verdict(rep, "radial_scaling", radial.scaling_error < 1e-12, radial.scaling_error, 1e-12);
  verdict(rep, "radial_cartan", radial.cartan_error < fd_tol, radial.cartan_error, fd_tol);
}

// ------------------------------------------------------------------- spectrum

void run_spectrum(const Scenario& s, Params& p, Report& rep) {
  Mat smat = p.matrix("s");
  if (smat.size() == 0) {
    const double a = p.number("a", pi);
    smat = a * Mat::Identity(2, 2);
  } else if (p.has("a")) {
    p.fail("a", "give either a or s, not both");
  }
  if (smat.rows() % 2 != 0) p.fail("s", "rank must be even");
  if (max_abs(Mat(smat - smat.transpose())) > 0.0) p.fail("s", "must be symmetric");
  const double period = p.number("period", 1.0, 1e-6, 1e6);
  const int n_modes = p.integer("n_modes", 256, 1, 2048);
  const int kmax = p.integer("kmax", 20, 0, 2048);
  const int trials = p.integer("trials", 1000, 0, 1000000);
  const double tol = p.number("tol", 1e-8, 0.0);
  const std::optional<double> expected_gap = p.optional_number("expected_gap");
  rep.params = p.finish();

  const SpectralOperator op = build_operator(period, constant_hessian(smat), n_modes);
  const Spectrum sp = spectrum(op);
  rep.scalars["gap"] = sp.gap;
  rep.scalars["kernel_dim"] = sp.kernel_dim;
  rep.scalars["matrix_size"] = static_cast<double>(op.matrix.rows());
  rep.scalars["asymmetry"] = op.asymmetry;

  // Constant S commuting with J0: eigenvalues 2πk/T − μ, μ over the spectrum of S.
  const Mat j0 = op.j0;
  const bool commuting = max_abs(Mat(smat * j0 - j0 * smat)) < 1e-14;
  rep.scalars["oracle_available"] = commuting ? 1.0 : 0.0;
  if (commuting) {
    const Vec mu = Eigen::SelfAdjointEigenSolver<Mat>(smat).eigenvalues();
    std::vector<std::pair<double, int>> oracle;
    for (Eigen::Index i = 0; i < mu.size(); ++i)
      for (int kk = -n_modes; kk <= n_modes; ++kk)
        oracle.emplace_back(2.0 * pi * kk / period - mu(i), kk);
    std::sort(oracle.begin(), oracle.end());
    Table t{{"k", "oracle", "computed"}, {}};
    std::vector<double> errs;
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      if (std::abs(oracle[i].second) > kmax) continue;
      const double got = sp.eigenvalues(static_cast<Eigen::Index>(i));
      t.rows.push_back({static_cast<double>(oracle[i].second), oracle[i].first, got});
      errs.push_back(std::abs(got - oracle[i].first));
    }
    rep.tables["oracle"] = t;
    max_verdict(rep, "eigenvalues_match_oracle", errs, tol, "row");
  }
  Table ev{{"index", "eigenvalue"}, {}};
  for (Eigen::Index i = 0; i < sp.eigenvalues.size(); ++i)
    ev.rows.push_back({static_cast<double>(i), sp.eigenvalues(i)});
  rep.tables["eigenvalues"] = ev;

  if (expected_gap)
    verdict(rep, "expected_gap", std::abs(sp.gap - *expected_gap) < tol,
            std::abs(sp.gap - *expected_gap), tol);
  if (trials > 0) {
    const GapReport g = gap_inequality_check(op, sp, trials, s.seed, tol);
    rep.scalars["gap_trials"] = g.trials;
    rep.scalars["min_quotient"] = g.min_quotient;
    rep.scalars["gap_squared"] = g.delta_sq;
    verdict(rep, "gap_inequality", g.violations == 0, g.violations, 0.0,
            "random sections orthogonal to the kernel with ||Bs||^2 < gap^2 ||s||^2");
    verdict(rep, "gap_attained", g.extremal_error < tol, g.extremal_error, tol);
  }
}

// ------------------------------------------------------------- cylinder_decay

void run_cylinder_decay(const Scenario&, Params& p, Report& rep) {
  const double a = p.number("a", -0.5, -2.0 * pi + 1e-6, 0.0);
  const int n_modes = p.integer("n_modes", 32, 0, 512);
  CylinderGrid grid;
  grid.R = p.number("R", 20.0, 1e-3, 1e4);
  grid.n_tau = p.integer("n_tau", 512, 3, 1 << 20);
  grid.n_t = p.integer("n_t", 128, 1, 1 << 16);
  const double delta0 = p.number("delta0", 1.5, 0.0, 1e3);
  const double forcing = p.number("forcing", 0.3);
  const double initial = p.number("initial", 1.0);
  const double rel_tol = p.number("rel_tol", 0.02, 0.0);
  const double control_max = p.number("control_max", 0.01, 0.0);
  const double floor = p.number("floor", 1e-12, 0.0);
  rep.params = p.finish();

  const SpectralOperator op = build_operator(1.0, constant_hessian(a * Mat::Identity(2, 2)), n_modes);
  const Vec e1 = Vec::Unit(2, 0);
  Forcing L;
  L.delta0 = delta0;
  if (forcing != 0.0) L.profile = forcing * constant_section(op, e1);
  const CylinderField field = solve_cylinder(op, L, initial * constant_section(op, e1), grid);

  DecayOptions dopts;
  dopts.floor = floor;
  const DecayFit fit = decay_rate(field, dopts);

  Table t{{"tau", "norm", "fit"}, {}};
  for (std::size_t i = 0; i < field.taus.size(); ++i)
    t.rows.push_back({field.taus[i], field.slice_norms[i],
                      std::exp(fit.intercept - fit.delta_hat * field.taus[i])});
  rep.tables["norms"] = t;
  rep.scalars["delta_hat"] = fit.delta_hat;
  rep.scalars["r_squared"] = fit.r_squared;
  rep.scalars["window_begin"] = fit.window_begin;
  rep.scalars["window_end"] = fit.window_end;
  rep.scalars["window_count"] = fit.count;
  rep.scalars["tail_window"] = fit.tail_window ? 1.0 : 0.0;

  // The excited constant mode has eigenvalue −a.
  const double lambda1 = -a;
  if (lambda1 > 1e-12 && (initial != 0.0 || forcing != 0.0)) {
    double expected = lambda1;
    if (forcing != 0.0) expected = initial != 0.0 ? std::min(lambda1, delta0) : delta0;
    rep.scalars["expected_rate"] = expected;
    const double rel = std::abs(fit.delta_hat / expected - 1.0);
    verdict(rep, "decay_rate", rel < rel_tol, rel, rel_tol, "relative error of the fitted rate");
  } else {
    rep.scalars["expected_rate"] = 0.0;
    verdict(rep, "no_spurious_decay", fit.delta_hat < control_max, fit.delta_hat, control_max,
            "kernel data must not decay");
  }
}

// -------------------------------------------------------------- three_interval

void run_three_interval(const Scenario& s, Params& p, Report& rep) {
  const double c = p.number("c", 0.8, 1e-6, 50.0);
  const std::string shape = p.choice("sequence", "exponential", {"exponential", "cosh", "custom"});
  std::vector<double> x;
  if (shape == "custom") {
    x = p.numbers("x", {}, 2);
  } else {
    const int n = p.integer("length", 20, 2, 100000);
    const double amp = p.number("amplitude", 1.0, 0.0);
    for (int k = 0; k <= n; ++k)
      x.push_back(shape == "exponential" ? amp * std::exp(-c * k)
                                         : amp * std::cosh(c * (k - 0.5 * n)));
  }
  const double gamma = p.number("gamma", gamma_of_c(c), 1e-12, 0.5 - 1e-12);
  const double slack = p.number("slack", 1e-12, 0.0);
  const int trials = p.integer("random_trials", 10000, 0, 10000000);
  const int max_len = p.integer("random_max_length", 50, 2, 10000);
  const double identity_tol = p.number("identity_tol", 1e-12, 0.0);
  rep.params = p.finish();

  const ThreeIntervalResult r = three_interval_bound(x, gamma, slack);
  rep.scalars["gamma"] = gamma;
  rep.scalars["xi"] = r.xi;
  Table t{{"k", "x", "bound"}, {}};
  for (std::size_t k = 0; k < x.size(); ++k)
    t.rows.push_back({static_cast<double>(k), x[k],
                      r.bounds.size() ? r.bounds(static_cast<Eigen::Index>(k)) : 0.0});
  rep.tables["sequence"] = t;
  verdict(rep, "hypothesis", r.hypothesis_holds, static_cast<double>(r.violations.size()), 0.0,
          r.hypothesis_holds ? "" : "first violation at k = " + std::to_string(r.violations[0]),
          r.hypothesis_holds ? -1 : r.violations[0]);
  if (r.hypothesis_holds)
    verdict(rep, "bound", r.bound_holds, static_cast<double>(r.bound_failures.size()), 0.0,
            r.bound_holds ? "" : "first failure at k = " + std::to_string(r.bound_failures[0]),
            r.bound_holds ? -1 : r.bound_failures[0]);

  // ξ(γ(c)) = e^c across a range of c.
  std::vector<double> ident;
  for (int i = 0; i < 500; ++i) {
    const double ci = 0.01 + (5.0 - 0.01) * i / 499.0;
    ident.push_back(std::abs(growth_factor(gamma_of_c(ci)) / std::exp(ci) - 1.0));
  }
  max_verdict(rep, "growth_factor_identity", ident, identity_tol, "c index");

  if (trials > 0) {
    const CounterRng root(s.seed);
    std::vector<int> status(trials, 0);  // 0 skipped, 1 bound holds, 2 bound fails
    parallel_for(static_cast<std::size_t>(trials), [&](std::size_t i) {
      CounterRng rng = root.split(i);
      const int n = 2 + static_cast<int>(rng.uniform() * (max_len - 1));
      const double gi = rng.uniform(0.05, 0.49);
      std::vector<double> y(n + 1);
      y[0] = rng.uniform(0.0, 2.0);
      y[n] = rng.uniform(0.0, 2.0);
      for (int k = 1; k < n; ++k) y[k] = rng.uniform(0.0, 1.0);
      for (int sweep = 0; sweep < 200; ++sweep)
        for (int k = 1; k < n; ++k) y[k] = std::min(y[k], gi * (y[k - 1] + y[k + 1]));
      const ThreeIntervalResult ri = three_interval_bound(y, gi);
      if (ri.hypothesis_holds) status[i] = ri.bound_holds ? 1 : 2;
    });
    const long checked = std::count_if(status.begin(), status.end(), [](int v) { return v > 0; });
    const auto bad = std::find(status.begin(), status.end(), 2);
    rep.scalars["random_checked"] = static_cast<double>(checked);
    const long failures = std::count(status.begin(), status.end(), 2);
    verdict(rep, "random_sequences", failures == 0, static_cast<double>(failures), 0.0,
            failures == 0 ? "" : "trial failed the bound",
            failures == 0 ? -1 : static_cast<long>(bad - status.begin()));
  }
}

// ------------------------------------------------------------- center_of_mass

void run_center_of_mass(const Scenario&, Params& p, Report& rep) {
  const std::vector<double> base = p.numbers("base", {0.3, 0.55}, 2, 2);
  const double period = p.number("period", 1.0, 1e-3, 1e3);
  const int n = p.integer("samples", 64, 4, 1 << 16);
  const double tangent = p.number("tangent_offset", 0.04);
  const double wobble = p.number("tangent_wobble", 0.02);
  const double normal = p.number("normal_offset", 0.01);
  const double reparam = p.number("reparametrization", 0.01);
  const double tube = p.number("tube_radius", 0.25, 0.0);
  const double tol = p.number("tol", 1e-8, 0.0);
  const int max_it = p.integer("max_iterations", 12, 1, 1000);
  rep.params = p.finish();

  FlatTorusModel model = flat_torus_model();
  model.tube_radius = tube;
  std::vector<Vec> loop;
  for (int j = 0; j < n; ++j) {
    const double t = static_cast<double>(j) / n;
    Vec q(3);
    q << base[0] + period * t + reparam * std::sin(2.0 * pi * t),
        base[1] + tangent + wobble * std::cos(2.0 * pi * t), normal;
    loop.push_back(q);
  }
  CenterOfMassOptions opts;
  opts.max_iterations = max_it;
  opts.tol = std::min(1e-9, tol);
  const CenterOfMassResult r = center_of_mass(model, loop, period, opts);

  Vec m_expected(2);
  m_expected << base[0], base[1] + tangent;
  const double m_err = model.log(m_expected, r.m).norm();
  Table t{{"t", "h", "expected"}, {}};
  std::vector<double> h_err;
  for (int j = 0; j < n; ++j) {
    const double tj = static_cast<double>(j) / n;
    const double e = tj + reparam * std::sin(2.0 * pi * tj) / period;
    t.rows.push_back({tj, r.h(j), e});
    h_err.push_back(std::abs(r.h(j) - e));
  }
  rep.tables["h"] = t;
  rep.scalars["m0"] = r.m(0);
  rep.scalars["m1"] = r.m(1);
  rep.scalars["iterations"] = r.iterations;
  rep.scalars["mean_residual"] = r.mean_residual;
  rep.scalars["xi_residual"] = r.xi_residual;
  rep.scalars["tube_distance"] = r.tube_distance;

  verdict(rep, "center", m_err < tol, m_err, tol);
  max_verdict(rep, "reparametrization", h_err, tol, "t index");
  verdict(rep, "mean_zero", r.mean_residual < tol, r.mean_residual, tol);
  verdict(rep, "in_contact_plane", r.xi_residual < tol, r.xi_residual, tol);
  verdict(rep, "iterations", r.iterations <= max_it, r.iterations, max_it);
}

// -------------------------------------------------------------- action_charge

void run_action_charge(const Scenario&, Params& p, Report& rep) {
  const double w0 = p.number("w0", 1.0, 1e-3, 1e3);
  const std::vector<double> weights = p.numbers("weights", {std::sqrt(2.0)}, 1, 4);
  const double drift = p.number("drift", 0.0);
  const int multiple = p.integer("multiple", 1, 1, 100);
  const double bump = p.number("bump", 0.0);
  const double R = p.number("R", 2.0, 1e-3, 1e3);
  const int n_tau = p.integer("n_tau", 11, 3, 1 << 16);
  const int n_t = p.integer("n_t", 32, 4, 1 << 16);
  const double tol = p.number("tol", 1e-10, 0.0);
  rep.params = p.finish();

  const ContactChart chart = models::weighted_ellipsoid(w0, weights);
  std::vector<std::vector<Vec>> w(n_tau, std::vector<Vec>(n_t));
  for (int i = 0; i < n_tau; ++i)
    for (int j = 0; j < n_t; ++j) {
      const double tau = R * i / (n_tau - 1);
      const double t = static_cast<double>(j) / n_t;
      Vec z = Vec::Zero(chart.dim());
      z(0) = std::fmod(drift * tau + 2.0 * pi * multiple * t, 2.0 * pi);
      z(1) = bump * std::exp(-tau) * std::cos(2.0 * pi * t);
      w[i][j] = z;
    }
  const ActionCharge ac = action_charge(w, R, chart);
  const double period = 2.0 * pi / w0;
  rep.scalars["action"] = ac.action;
  rep.scalars["charge"] = ac.charge;
  rep.scalars["pi_energy"] = ac.pi_energy;
  rep.scalars["period"] = period;

  if (bump == 0.0) {
    // λ = (1/w0) dθ on the axis.
    const double ea = multiple * period, ec = -drift / w0;
    rep.scalars["expected_action"] = ea;
    rep.scalars["expected_charge"] = ec;
    verdict(rep, "action", std::abs(ac.action - ea) < tol, std::abs(ac.action - ea), tol);
    verdict(rep, "charge", std::abs(ac.charge - ec) < tol, std::abs(ac.charge - ec), tol);
    verdict(rep, "pi_energy_vanishes", ac.pi_energy < tol, ac.pi_energy, tol);
  } else {
    verdict(rep, "pi_energy_positive", ac.pi_energy > 0.0, ac.pi_energy, 0.0);
  }
}

using Runner = std::function<void(const Scenario&, Params&, Report&)>;

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> r{
      {"dual_checks", run_dual_checks},       {"perturbed_reeb", run_perturbed_reeb},
      {"orbit", run_orbit},                   {"return_map", run_return_map},
      {"thickening", run_thickening},         {"spectrum", run_spectrum},
      {"cylinder_decay", run_cylinder_decay}, {"three_interval", run_three_interval},
      {"center_of_mass", run_center_of_mass}, {"action_charge", run_action_charge},
  };
  return r;
}

std::string type_name(const std::exception& e) {
  int status = 0;
  const char* mangled = typeid(e).name();
  std::unique_ptr<char, void (*)(void*)> d(abi::__cxa_demangle(mangled, nullptr, nullptr, &status),
                                           std::free);
  std::string name = status == 0 && d ? d.get() : mangled;
  if (const auto pos = name.rfind("::"); pos != std::string::npos) name = name.substr(pos + 2);
  return name;
}

// JSON has no NaN or infinity; spell them as strings.
json num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double unnum(const json& j) {
  if (j.is_number()) return j.get<double>();
  const std::string s = j.get<std::string>();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  throw ConfigError("bad number in report: " + s);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

bool Report::passed() const {
  if (!error.empty() || verdicts.empty()) return false;
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

json Report::to_json() const {
  json j;
  j["name"] = name;
  j["kind"] = kind;
  j["seed"] = seed;
  j["params"] = params;
  j["scalars"] = json::object();
  for (const auto& [k, v] : scalars) j["scalars"][k] = num(v);
  j["tables"] = json::object();
  for (const auto& [k, t] : tables) {
    json rows = json::array();
    for (const auto& r : t.rows) {
      json row = json::array();
      for (double v : r) row.push_back(num(v));
      rows.push_back(std::move(row));
    }
    j["tables"][k] = {{"columns", t.columns}, {"rows", std::move(rows)}};
  }
  j["verdicts"] = json::array();
  for (const auto& v : verdicts)
    j["verdicts"].push_back({{"name", v.name},
                             {"verdict", v.pass ? "pass" : "fail"},
                             {"value", num(v.value)},
                             {"tolerance", num(v.tolerance)},
                             {"detail", v.detail},
                             {"index", v.index}});
  j["error"] = error;
  j["status"] = passed() ? "pass" : "fail";
  return j;
}

Report Report::from_json(const json& j) {
  try {
    Report r;
    r.name = j.at("name").get<std::string>();
    r.kind = j.at("kind").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.params = j.at("params");
    for (const auto& [k, v] : j.at("scalars").items()) r.scalars[k] = unnum(v);
    for (const auto& [k, t] : j.at("tables").items()) {
      Table tab;
      tab.columns = t.at("columns").get<std::vector<std::string>>();
      for (const auto& row : t.at("rows")) {
        std::vector<double> vals;
        for (const auto& v : row) vals.push_back(unnum(v));
        tab.rows.push_back(std::move(vals));
      }
      r.tables[k] = std::move(tab);
    }
    for (const auto& v : j.at("verdicts"))
      r.verdicts.push_back({v.at("name").get<std::string>(), v.at("verdict") == "pass",
                            unnum(v.at("value")), unnum(v.at("tolerance")),
                            v.at("detail").get<std::string>(), v.at("index").get<long>()});
    r.error = j.at("error").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed report: ") + e.what());
  }
}

const std::vector<std::string>& scenario_kinds() {
  static const std::vector<std::string> kinds = [] {
    std::vector<std::string> k;
    for (const auto& [name, fn] : runners()) k.push_back(name);
    return k;
  }();
  return kinds;
}

Scenario parse_scenario(const json& j, const std::string& fallback_name) {
  if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
  static const std::set<std::string> allowed{"kind", "seed", "params", "name", "description"};
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError("unknown scenario key '" + k + "'");
  Scenario s;
  if (!j.contains("kind") || !j["kind"].is_string()) throw ConfigError("scenario needs a string 'kind'");
  s.kind = j["kind"].get<std::string>();
  if (!runners().count(s.kind)) {
    std::string msg = "unknown kind '" + s.kind + "'; expected one of";
    for (const auto& k : scenario_kinds()) msg += " " + k;
    throw ConfigError(msg);
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("seed must be a nonnegative integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("params")) {
    if (!j["params"].is_object()) throw ConfigError("params must be an object");
    s.params = j["params"];
  }
  s.name = fallback_name;
  if (j.contains("name")) {
    if (!j["name"].is_string() || j["name"].get<std::string>().empty())
      throw ConfigError("name must be a nonempty string");
    s.name = j["name"].get<std::string>();
  }
  if (j.contains("description") && !j["description"].is_string())
    throw ConfigError("description must be a string");
  if (s.name.find_first_of("/\\") != std::string::npos)
    throw ConfigError("name must not contain path separators");
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_scenario(j, std::filesystem::path(path).stem().string());
}

Report run_scenario(const Scenario& s) {
  const auto it = runners().find(s.kind);
  if (it == runners().end()) throw ConfigError("unknown kind '" + s.kind + "'");
  Report rep;
  rep.name = s.name;
  rep.kind = s.kind;
  rep.seed = s.seed;
  Params p(s.params, s.kind);
  try {
    it->second(s, p, rep);
  } catch (const NumericalError& e) {
    rep.error = type_name(e) + ": " + e.what();
    rep.verdicts.push_back({"numerical_error", false, 0.0, 0.0, rep.error, -1});
  } catch (const json::exception& e) {
    throw ConfigError(std::string("params: ") + e.what());
  }
  return rep;
}

int exit_code(const Report& r) { return r.passed() ? 0 : 1; }

std::string report_json(const Report& r) { return r.to_json().dump(2) + "\n"; }

std::map<std::string, std::string> report_csv(const Report& r) {
  std::map<std::string, std::string> out;
  std::string sc = "key,value\n";
  for (const auto& [k, v] : r.scalars) sc += csv_field(k) + "," + fmt(v) + "\n";
  out["scalars"] = sc;
  std::string vd = "name,verdict,value,tolerance,index,detail\n";
  for (const auto& v : r.verdicts)
    vd += csv_field(v.name) + "," + (v.pass ? "pass" : "fail") + "," + fmt(v.value) + "," +
          fmt(v.tolerance) + "," + std::to_string(v.index) + "," + csv_field(v.detail) + "\n";
  out["verdicts"] = vd;
  for (const auto& [k, t] : r.tables) {
    std::string s;
    for (std::size_t c = 0; c < t.columns.size(); ++c)
      s += (c ? "," : "") + csv_field(t.columns[c]);
    s += "\n";
    for (const auto& row : t.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) s += (c ? "," : "") + fmt(row[c]);
      s += "\n";
    }
    out["table_" + k] = s;
  }
  return out;
}

void write_report(const Report& r, const std::string& dir, const std::string& format) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  auto write = [](const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f) throw IoError("cannot write " + path.string());
  };
  if (format == "json") {
    write(fs::path(dir) / (r.name + ".json"), report_json(r));
  } else if (format == "csv") {
    for (const auto& [suffix, text] : report_csv(r))
      write(fs::path(dir) / (r.name + "." + suffix + ".csv"), text);
  } else {
    throw ConfigError("unknown format '" + format + "'");
  }
}

}  // namespace contactlab
