// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "contactlab/scenario.hpp"

using namespace contactlab;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream note;
};

// Runs an inline scenario and folds its verdicts into the outcome.
Report check(Outcome& out, const std::string& label, const std::string& text) {
  const Report r = run_scenario(parse_scenario(json::parse(text), label));
  if (!r.passed()) {
    out.pass = false;
    out.note << " [" << label << ":";
    if (!r.error.empty()) out.note << " " << r.error;
    for (const auto& v : r.verdicts)
      if (!v.pass) out.note << " " << v.name << "=" << v.value << " (tol " << v.tolerance << ")";
    out.note << "]";
  }
  return r;
}

double verdict_value(const Report& r, const std::string& name) {
  for (const auto& v : r.verdicts)
    if (v.name == name) return v.value;
  return std::numeric_limits<double>::quiet_NaN();
}

void require(Outcome& out, bool cond, const std::string& what) {
  if (!cond) {
    out.pass = false;
    out.note << " [" << what << "]";
  }
}

Outcome duals() {
  Outcome o;
  const Report r = check(o, "duals", R"({"kind": "dual_checks", "seed": 101,
      "params": {"dims": [1, 2, 3], "samples": 1000, "include_conformal": false,
                 "tol": 1e-9, "formula_tol": 1e-12}})");
  o.note << "round trip " << verdict_value(r, "round_trip") << ", component formulas "
         << verdict_value(r, "darboux_formula");
  return o;
}

Outcome perturbed() {
  Outcome o;
  const Report r = check(o, "perturbed", R"({"kind": "perturbed_reeb", "seed": 102,
      "params": {"dims": [1, 2], "samples": 100, "tol": 1e-8}})");
  o.note << "max gap over 200 cases " << verdict_value(r, "formula_vs_direct_solve");
  return o;
}

Outcome return_maps() {
  Outcome o;
  const Report e = check(o, "ellipsoid", R"({"kind": "return_map", "seed": 103,
      "params": {"model": "ellipsoid", "w0": 1.0, "weights": [1.41421356], "eigen_tol": 1e-6}})");
  const Report t = check(o, "torus", R"({"kind": "return_map", "seed": 104,
      "params": {"model": "torus", "winding": [1, 0, 0], "period_guess": 1.0}})");
  require(o, t.scalars.at("multiplicity") == 2.0, "torus orbit not Morse-Bott of multiplicity 2");
  require(o, e.scalars.at("multiplicity") == 0.0, "irrational ellipsoid orbit not nondegenerate");
  o.note << "rotation eigenvalue error " << verdict_value(e, "eigenvalues") << ", torus |Psi - I| "
         << t.scalars.at("identity_defect") << ", multiplicity " << t.scalars.at("multiplicity");
  return o;
}

Outcome thickenings() {
  Outcome o;
  double radius = 1e9, lift = 0.0, cartan = 0.0;
  for (const char* text : {
           R"({"kind": "thickening", "seed": 105, "params": {"setup": "circle", "k": 1}})",
           R"({"kind": "thickening", "seed": 106, "params": {"setup": "torus", "k": 1}})",
           R"({"kind": "thickening", "seed": 107, "params": {"setup": "mixed", "m": 1, "g": 1, "k": 1}})"}) {
    const Report r = check(o, json::parse(text)["params"]["setup"], text);
    radius = std::min(radius, r.scalars.count("tube_radius") ? r.scalars.at("tube_radius") : 0.0);
    lift = std::max(lift, verdict_value(r, "reeb_on_zero_section"));
    cartan = std::max(cartan, verdict_value(r, "radial_cartan"));
  }
  o.note << "tube radius >= " << radius << ", zero-section Reeb error " << lift
         << ", radial identities " << cartan;
  return o;
}

Outcome spectra() {
  Outcome o;
  double worst = 0.0;
  for (const char* a : {"0.3", "3.141592653589793", "-1.7"}) {
    const std::string text = std::string(R"({"kind": "spectrum", "seed": 108, "params": {"a": )") + a +
                             R"(, "n_modes": 256, "kmax": 20, "trials": 1000, "tol": 1e-8}})";
    const Report r = check(o, std::string("a=") + a, text);
    worst = std::max(worst, verdict_value(r, "eigenvalues_match_oracle"));
    require(o, verdict_value(r, "gap_inequality") == 0.0, "gap inequality violated");
  }
  o.note << "oracle error " << worst << ", no gap violations in 3 x 1000 trials";
  return o;
}

Outcome three_interval() {
  Outcome o;
  const Report r = check(o, "three_interval", R"({"kind": "three_interval", "seed": 109,
      "params": {"c": 0.8, "sequence": "exponential", "length": 40, "random_trials": 10000,
                 "identity_tol": 1e-12}})");
  require(o, r.scalars.at("random_checked") > 9000, "too few random sequences met the hypothesis");
  o.note << r.scalars.at("random_checked") << " random sequences bounded, identity error "
         << verdict_value(r, "growth_factor_identity");
  return o;
}

Outcome decay() {
  Outcome o;
  const Report slow = check(o, "slow", R"({"kind": "cylinder_decay", "seed": 110,
      "params": {"a": -0.5, "delta0": 1.5, "forcing": 0.3, "initial": 1.0,
                 "R": 20, "n_tau": 512, "n_t": 128, "n_modes": 32, "rel_tol": 0.02}})");
  const Report forced = check(o, "forced", R"({"kind": "cylinder_decay", "seed": 111,
      "params": {"a": -3.141592653589793, "delta0": 1.0, "forcing": 1.0, "initial": 1.0,
                 "R": 20, "n_tau": 512, "n_t": 128, "n_modes": 32, "rel_tol": 0.02}})");
  const Report control = check(o, "control", R"({"kind": "cylinder_decay", "seed": 112,
      "params": {"a": 0.0, "forcing": 0.0, "initial": 1.0,
                 "R": 20, "n_tau": 512, "n_t": 128, "n_modes": 32, "control_max": 0.01}})");
  o.note << "rates " << slow.scalars.at("delta_hat") << " (expect 0.5), "
         << forced.scalars.at("delta_hat") << " (expect 1), control "
         << control.scalars.at("delta_hat");
  return o;
}

Outcome center_of_mass() {
  Outcome o;
  const Report orbit = check(o, "reeb_orbit", R"({"kind": "center_of_mass", "seed": 113,
      "params": {"tangent_offset": 0, "tangent_wobble": 0, "normal_offset": 0,
                 "reparametrization": 0, "tol": 1e-12}})");
  int iterations = 0;
  for (const char* text : {
           R"({"kind": "center_of_mass", "seed": 114, "params": {"tol": 1e-8}})",
           R"({"kind": "center_of_mass", "seed": 115, "params": {"base": [0.9, 0.1],
               "tangent_offset": -0.07, "tangent_wobble": 0.03, "normal_offset": -0.02,
               "reparametrization": 0.02, "tol": 1e-8}})"}) {
    const Report r = check(o, "offset", text);
    iterations = std::max(iterations, static_cast<int>(r.scalars.count("iterations") ? r.scalars.at("iterations") : 99));
  }
  o.note << "orbit residual " << orbit.scalars.at("mean_residual") << ", offset loops in <= "
         << iterations << " iterations";
  return o;
}

Outcome determinism() {
  Outcome o;
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(CONTACTLAB_SCENARIOS))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  require(o, !files.empty(), "no scenarios found");
  for (const auto& f : files) {
    const Scenario s = load_scenario(f.string());
    const std::string first = report_json(run_scenario(s));
    setenv("CONTACTLAB_THREADS", "1", 1);
    const std::string serial = report_json(run_scenario(s));
    unsetenv("CONTACTLAB_THREADS");
    const std::string again = report_json(run_scenario(s));
    require(o, first == again && first == serial, f.filename().string() + " differs between runs");
  }
  o.note << files.size() << " scenarios, three runs each";
  return o;
}

struct Criterion {
  int id;
  const char* title;
  double limit_s;  // 0: no limit
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "dual isomorphism", 5.0, duals},
      {2, "perturbed Reeb identity", 10.0, perturbed},
      {3, "return maps", 0.0, return_maps},
      {4, "thickening", 0.0, thickenings},
      {5, "spectrum and gap", 30.0, spectra},
      {6, "three-interval lemma", 0.0, three_interval},
      {7, "cylinder decay", 60.0, decay},
      {8, "center of mass", 0.0, center_of_mass},
      {9, "determinism", 0.0, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.note << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0.0 && secs > c.limit_s) {
      o.pass = false;
      o.note << " [over time limit " << c.limit_s << " s]";
    }
    std::printf("%s %d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.title,
                o.note.str().c_str(), secs);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
