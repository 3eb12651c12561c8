#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rhl/errors.hpp"
#include "rhl/grid.hpp"

namespace rhl::flow {

inline constexpr double kCflFactor = 0.2;

/// Largest stable explicit step: 0.2 h² min(e^{2f}).
double cfl_limit(const ConformalMetric& metric);

/// One RK4 step of ∂_t f = e^{-2f} Δ₀f, i.e. ∂_t g = -2 Ric in conformal form.
ConformalMetric ricci_step(const ConformalMetric& metric, double dt);

/// One RK4 step of ∂_t u = Δ_g u with the metric held fixed.
ScalarField heat_step(const ConformalMetric& metric, const ScalarField& u, double dt);

struct Snapshot {
  ConformalMetric metric;
  ScalarField u;

  double t() const { return metric.t(); }
};

/// Metric and u advanced together; the RK stages of u see the matching
/// stage of the metric.
Snapshot coupled_step(const Snapshot& state, double dt);

/// Time-ordered snapshots sharing one grid, spaced by a constant interval.
class FlowTrajectory {
 public:
  FlowTrajectory(std::vector<Snapshot> snapshots, double step_dt);

  const std::vector<Snapshot>& snapshots() const { return snapshots_; }
  const Snapshot& operator[](std::size_t k) const { return snapshots_[k]; }
  std::size_t size() const { return snapshots_.size(); }
  const GridSpec& spec() const { return snapshots_.front().metric.spec(); }

  // Integrator step used to produce the trajectory.
  double step_dt() const { return step_dt_; }
  // Spacing between consecutive snapshots (a whole multiple of step_dt).
  double spacing() const;
  int stride() const;
  double start_time() const { return snapshots_.front().t(); }
  double final_time() const { return snapshots_.back().t(); }

  // Conformal exponent at an arbitrary time in [start, final], linear in f
  // between the bracketing snapshots.
  ConformalMetric metric_at(double t) const;

 private:
  std::vector<Snapshot> snapshots_;
  double step_dt_;
};

struct RunConfig {
  std::string scenario = "unnamed";
  ScalarField f0;
  ScalarField u0;
  double dt = 0.0;
  double final_time = 0.0;
  int snapshot_every = 1;
  std::filesystem::path output_dir;

  RunConfig(ScalarField f, ScalarField u) : f0(std::move(f)), u0(std::move(u)) {}
  const GridSpec& spec() const { return f0.spec(); }
  // Number of integrator steps: the smallest multiple of snapshot_every with
  // step length final_time / steps <= dt.
  int steps() const;
  double effective_dt() const { return final_time / steps(); }
  // Throws InvalidArgument or CflViolation when the config cannot run.
  void validate() const;
};

/// Discrete maximum-principle bookkeeping collected while stepping.
struct MaxPrincipleLog {
  double max_increase = 0.0;  // largest one-step growth of max u
  double min_decrease = 0.0;  // largest one-step drop of min u
  double tolerance = 0.0;     // 10 dt ||Δu||_∞, maximised over steps
  bool ok() const { return max_increase <= tolerance && min_decrease <= tolerance; }
};

struct CoupledRun {
  FlowTrajectory trajectory;
  MaxPrincipleLog max_principle;
};

/// Raised when a run produces a non-finite value. Carries everything up to
/// and including the last finite snapshot.
class FlowAborted : public Error {
 public:
  FlowAborted(const std::string& what, FlowTrajectory partial) : Error(what), partial_(std::move(partial)) {}
  const FlowTrajectory& partial() const { return partial_; }

 private:
  FlowTrajectory partial_;
};

CoupledRun run_coupled_flow(const RunConfig& config);

/// Solves u_t + Δ_{g(t)} u - R u = 0 backward from u(T) = uT along the
/// trajectory via s = T - t, which is forward parabolic:
///   ∂_s u = Δ_{g(T-s)} u - R u.
/// The returned trajectory has the same metric snapshots with u replaced by
/// the conjugate solution.
FlowTrajectory conjugate_heat_solve(const FlowTrajectory& trajectory, const ScalarField& uT);

/// Exact shrinking round sphere g(t) = (1 - 2(n-1)t) g_{S^n}.
class SphereModel {
 public:
  explicit SphereModel(int n);

  int n() const { return n_; }
  double blowup_time() const { return 1.0 / (2.0 * (n_ - 1)); }
  double unit_volume() const;  // vol(S^n, g_round)

  struct State {
    double scale;
    double scalar_curvature;
    double first_eigenvalue;
    double volume;
    double heat_amplitude;     // factor multiplying a first spherical harmonic
    double conjugate_density;  // spatially constant conjugate solution with ∫u dg = 1
  };

  /// Throws DomainError unless 0 <= t < T*.
  State at(double t) const;
  double scale(double t) const;
  /// d_t(pole, point at polar angle θ) = sqrt(scale) θ.
  double distance(double theta, double t) const;

 private:
  int n_;
};

/// Binary trajectory file (little-endian), see FORMATS.md.
void write_trajectory(const std::filesystem::path& path, const FlowTrajectory& trajectory,
                      const std::string& config_echo);

struct StoredTrajectory {
  FlowTrajectory trajectory;
  std::string config_echo;
};
StoredTrajectory read_trajectory(const std::filesystem::path& path);

}  // namespace rhl::flow
