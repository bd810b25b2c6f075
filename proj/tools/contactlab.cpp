// contactlab run <scenario.json> [--out DIR] [--format json|csv] [--seed N]
// contactlab suite <dir> [--out DIR] [--format json|csv]
//
// Exit codes: 0 all verdicts pass, 1 numerical failure, 2 bad input.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "contactlab/errors.hpp"
#include "contactlab/scenario.hpp"

namespace fs = std::filesystem;
using namespace contactlab;

namespace {

constexpr int kPass = 0, kFail = 1, kConfig = 2;

std::string first_failure(const Report& r) {
  for (const auto& v : r.verdicts)
    if (!v.pass) return v.name + (v.detail.empty() ? "" : " (" + v.detail + ")");
  return r.verdicts.empty() ? "no verdicts" : "";
}

void emit(const Report& r, const std::string& out, const std::string& format) {
  if (!out.empty()) {
    write_report(r, out, format);
    return;
  }
  if (format == "json") {
    std::cout << report_json(r);
  } else {
    for (const auto& [suffix, text] : report_csv(r)) std::cout << "# " << suffix << "\n" << text;
  }
}

// Runs one scenario file; returns its exit code.
int run_one(const std::string& path, const std::string& out, const std::string& format,
            std::optional<std::uint64_t> seed, bool quiet) {
  const auto t0 = std::chrono::steady_clock::now();
  Scenario s = load_scenario(path);
  if (seed) s.seed = *seed;
  const Report r = run_scenario(s);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!quiet) emit(r, out, format);
  else if (!out.empty()) write_report(r, out, format);
  std::fprintf(stderr, "%s: %s in %.3f s\n", r.name.c_str(), r.passed() ? "pass" : "fail", secs);
  if (quiet) {
    if (r.passed()) std::printf("PASS %s (%s)\n", r.name.c_str(), r.kind.c_str());
    else std::printf("FAIL %s (%s): %s\n", r.name.c_str(), r.kind.c_str(), first_failure(r).c_str());
  }
  return exit_code(r);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"contactlab: contact-geometry numerics laboratory"};
  app.require_subcommand(1);

  std::string scenario_path, suite_dir, out, format = "json";
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "Run one scenario file");
  run->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  run->add_option("--out", out, "Directory for the report (default: stdout)");
  run->add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv"}));
  run->add_option("--seed", seed, "Override the scenario seed");

  auto* suite = app.add_subcommand("suite", "Run every *.json scenario in a directory");
  suite->add_option("dir", suite_dir, "Scenario directory")->required();
  suite->add_option("--out", out, "Directory for the reports");
  suite->add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfig;
  }

  if (run->parsed()) {
    try {
      return run_one(scenario_path, out, format, seed, false);
    } catch (const ConfigError& e) {
      std::fprintf(stderr, "config error: %s\n", e.what());
      return kConfig;
    } catch (const IoError& e) {
      std::fprintf(stderr, "io error: %s\n", e.what());
      return kConfig;
    }
  }

  std::error_code ec;
  if (!fs::is_directory(suite_dir, ec)) {
    std::fprintf(stderr, "io error: %s is not a directory\n", suite_dir.c_str());
    return kConfig;
  }
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(suite_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    std::fprintf(stderr, "io error: no scenarios in %s\n", suite_dir.c_str());
    return kConfig;
  }

  int passed = 0, failed = 0, broken = 0;
  for (const auto& f : files) {
    try {
      (run_one(f, out, format, std::nullopt, true) == kPass ? passed : failed)++;
    } catch (const std::runtime_error& e) {  // ConfigError or IoError
      ++broken;
      std::printf("ERROR %s: %s\n", fs::path(f).stem().c_str(), e.what());
    }
  }
  std::printf("suite: %d passed, %d failed, %d invalid\n", passed, failed, broken);
  if (broken) return kConfig;
  return failed ? kFail : kPass;
}
