#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rhl/barriers.hpp"
#include "rhl/constants.hpp"
#include "rhl/entropy.hpp"
#include "rhl/estimates.hpp"
#include "rhl/flows.hpp"
#include "rhl/identities.hpp"

namespace rhl::harness {

enum class Geometry { Torus, Sphere };

// f0 = f_amplitude sin(f_kx x) sin(f_ky y)
// u0 = u_offset + u_amplitude sin(u_kx x + u_ky y + u_phase)
struct InitialData {
  double f_amplitude = 0.0;
  double f_kx = 1.0;
  double f_ky = 1.0;
  double u_offset = 0.0;
  double u_amplitude = 1.0;
  double u_kx = 1.0;
  double u_ky = 0.0;
  double u_phase = 0.0;
};

struct Checks {
  std::vector<std::string> estimates;  // gradient, hessian, higher3, gradient-uniform, hessian-uniform,
                                       // shi1, shi2, zhang, laplacian
  double a = 1.0;
  double ball_x = 0.0;                 // centre of PB_r in domain coordinates
  double ball_y = 0.0;
  double ball_r = 1.0;
  double shi_constant = 0.0;           // 0: record the Shi ratios only
  std::vector<int> identities;         // orders k of the |∇^k u|² evolution identity
  std::vector<int> bernstein;          // orders m of the Bernstein inequality
  std::vector<std::string> barriers;   // psi1, phi1, phi2, ... (grid: m = 1 only)
  bool entropy = false;
  double entropy_tau_min = 0.0;
  bool conservation = false;
  int levels = 1;                      // refinement levels: h / 2^L, dt / 4^L, spacing / 2^L
};

enum class Expectation { Pass, CheckFailure };

struct Scenario {
  std::string name;
  Geometry geometry = Geometry::Torus;
  Expectation expect = Expectation::Pass;
  int n = 64;                          // grid points per side (torus) or dimension (sphere)
  double length = 0.0;                 // side of the periodic square; 0 means 2π
  InitialData initial;
  double dt = 0.0;                     // 0: dt_fraction x CFL limit of f0
  double dt_fraction = 1.0;
  double final_time = 0.0;
  int snapshot_every = 1;
  Checks checks;
  constants::LedgerOptions ledger;
  std::string source;                  // config text, echoed into outputs

  GridSpec grid(int level = 0) const;
  flow::RunConfig run_config(int level = 0) const;
  GridIndex ball_center(int level = 0) const;
};

/// INI-style config: sections [scenario] [grid] [initial] [run] [checks]
/// [ledger]. Unknown sections and keys are rejected; ConfigError carries the
/// offending field and line. See FORMATS.md.
Scenario parse_config(const std::string& text);
Scenario load_config(const std::filesystem::path& path);

enum class Status { Pass, Fail, Skipped };
const char* status_name(Status s);

struct Outcome {
  std::string check;
  Status status = Status::Pass;
  std::string detail;
};

struct BarrierRecord {
  std::string kind;
  std::string path;            // "grid" or "sphere"
  std::size_t checked = 0;
  std::size_t skipped = 0;
  double measure = 0.0;        // grid: sup relative violation; sphere: worst relative margin
  double tolerance = 0.0;
  bool pass = false;
};

struct ConservationRecord {
  std::string quantity;
  double initial = 0.0;
  double max_relative_drift = 0.0;
  double tolerance = 0.0;
  bool pass() const { return max_relative_drift <= tolerance; }
};

struct RunReport {
  std::string scenario;
  constants::ConstantLedger ledger;
  std::vector<estimate::EstimateReport> estimates;
  std::vector<identity::ConvergenceRecord> identities;
  std::vector<std::vector<identity::BernsteinReport>> bernstein;  // [order][level]
  std::vector<double> level_h;
  std::vector<BarrierRecord> barriers;
  std::vector<entropy::EntropyRecord> entropy;
  entropy::ResidualConvergence conjugate;
  std::vector<ConservationRecord> conservation;
  std::vector<Outcome> outcomes;

  bool pass() const;  // no outcome failed
};

/// Runs every configured check and writes CSVs, SVG plots and summary.csv
/// into out_dir (created if needed). Output is byte-identical across runs.
RunReport run_scenario(const Scenario& scenario, const std::filesystem::path& out_dir);

/// RHL_OUT if set, else "rhl-out".
std::filesystem::path default_output_dir();

/// Root certificates of the constant chain (no PDE): γ roots with
/// back-substitution residuals, the k = 1 γ family against the dedicated
/// constraint, the B roots, C_cross and A1 from the symbolic expansion, and
/// the full ledger for dimension n.
std::vector<Outcome> verify_constants(int n = 2, int kmax = 3);

/// *.ini files of a directory, sorted by name.
std::vector<std::filesystem::path> scenario_files(const std::filesystem::path& dir);

/// Log-log plot of residual against h with a slope-2 reference line.
std::string convergence_svg(const std::string& title, const std::vector<double>& h,
                            const std::vector<double>& residual);

namespace exit_code {
inline constexpr int kPass = 0;
inline constexpr int kRuntime = 1;
inline constexpr int kCheckFailure = 2;
inline constexpr int kUsage = 64;
}  // namespace exit_code

}  // namespace rhl::harness
