#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rhl/constants.hpp"
#include "rhl/errors.hpp"
#include "rhl/harness.hpp"

#ifndef RHL_SCENARIO_DIR
#define RHL_SCENARIO_DIR "scenarios"
#endif

namespace fs = std::filesystem;
using namespace rhl;

namespace {

void print_outcomes(const std::vector<harness::Outcome>& outcomes) {
  for (const auto& o : outcomes)
    std::cout << harness::status_name(o.status) << ' ' << o.check << ": " << o.detail << '\n';
}

int run(const fs::path& config, const fs::path& out) {
  const harness::Scenario s = harness::load_config(config);
  const fs::path dir = out / s.name;
  const harness::RunReport rep = harness::run_scenario(s, dir);
  print_outcomes(rep.outcomes);
  std::cout << (rep.pass() ? "PASS " : "FAIL ") << s.name << " -> " << dir.string() << '\n';
  return rep.pass() ? harness::exit_code::kPass : harness::exit_code::kCheckFailure;
}

int ledger(int n, int kmax) {
  constants::LedgerOptions o;
  o.n = n;
  o.kmax = kmax;
  const constants::ConstantLedger l(o);
  std::cout << l.to_csv();
  return l.violations().empty() ? harness::exit_code::kPass : harness::exit_code::kCheckFailure;
}

int verify_constants() {
  const auto outcomes = harness::verify_constants();
  print_outcomes(outcomes);
  for (const auto& o : outcomes)
    if (o.status == harness::Status::Fail) return harness::exit_code::kCheckFailure;
  return harness::exit_code::kPass;
}

int suite(const fs::path& dir, const fs::path& out) {
  const auto files = harness::scenario_files(dir);
  if (files.empty()) throw ConfigError("no *.ini scenarios in " + dir.string());
  const auto start = std::chrono::steady_clock::now();
  int mismatches = 0;
  for (const auto& file : files) {
    const auto t0 = std::chrono::steady_clock::now();
    const harness::Scenario s = harness::load_config(file);
    const harness::RunReport rep = harness::run_scenario(s, out / s.name);
    const bool expected_pass = s.expect == harness::Expectation::Pass;
    const bool ok = rep.pass() == expected_pass;
    if (!ok) ++mismatches;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (ok ? "ok   " : "BAD  ") << s.name << "  result " << (rep.pass() ? "pass" : "check-failure")
              << ", expected " << (expected_pass ? "pass" : "check-failure") << "  (" << secs << " s)\n";
    if (!ok) print_outcomes(rep.outcomes);
  }
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << files.size() - mismatches << '/' << files.size() << " scenarios as expected in " << total << " s\n";
  return mismatches == 0 ? harness::exit_code::kPass : harness::exit_code::kCheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical checks of local derivative estimates for the heat equation under Ricci flow"};
  app.require_subcommand(1);
  std::string out;
  app.add_option("--out", out, "Output directory (default: $RHL_OUT or ./rhl-out)");

  std::string config;
  auto* run_cmd = app.add_subcommand("run", "Run one scenario config");
  run_cmd->add_option("config", config, "Scenario .ini file")->required();

  int n = 2, kmax = 3;
  auto* ledger_cmd = app.add_subcommand("ledger", "Print the constant ledger as CSV");
  ledger_cmd->add_option("--n", n, "Dimension")->check(CLI::Range(1, 64));
  ledger_cmd->add_option("--kmax", kmax, "Highest derivative order")->check(CLI::Range(1, 3));

  auto* verify_cmd = app.add_subcommand("verify-constants", "Certify the constant roots (no PDE)");

  std::string dir = RHL_SCENARIO_DIR;
  auto* suite_cmd = app.add_subcommand("suite", "Run every bundled scenario and compare with its expectation");
  suite_cmd->add_option("dir", dir, "Scenario directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return harness::exit_code::kUsage;
  }

  const fs::path out_dir = out.empty() ? harness::default_output_dir() : fs::path(out);
  try {
    if (*run_cmd) return run(config, out_dir);
    if (*ledger_cmd) return ledger(n, kmax);
    if (*verify_cmd) return verify_constants();
    if (*suite_cmd) return suite(dir, out_dir);
  } catch (const ConfigError& e) {
    std::cerr << "rhl: " << e.what() << '\n';
    return harness::exit_code::kUsage;
  } catch (const std::exception& e) {
    std::cerr << "rhl: " << e.what() << '\n';
    return harness::exit_code::kRuntime;
  }
  return harness::exit_code::kUsage;
}
