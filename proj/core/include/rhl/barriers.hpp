#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "rhl/flows.hpp"
#include "rhl/grid.hpp"

namespace rhl::barrier {

enum class Kind { Psi, Phi };

/// Ψ_m(s) = α r² / (r²/4^{m-1} - s²)²,  Φ_m = β Ψ_m^m + γ / t^m.
/// Φ_1 uses β = γ = 1.
struct Params {
  Kind kind = Kind::Psi;
  int m = 1;
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double r = 1.0;

  double rho() const;             // r² / 4^{m-1}
  double support_radius() const;  // r / 2^{m-1}
};

const char* kind_name(const Params& p);  // "Psi1", "Phi2", ...

double psi(const Params& p, double s);  // +inf for s >= support radius
double psi_s(const Params& p, double s);
double psi_ss(const Params& p, double s);

/// Barrier value at distance s and time t; +inf outside the support.
double value(const Params& p, double s, double t);
ScalarField evaluate(const Params& p, const ScalarField& distance, double t);

/// Right side of the comparison inequality (∂_t - Δ)B >= rhs:
/// -Ψ² for Ψ kinds, -Φ_1² for Φ_1, -Φ_m²/v^{m-1} + v^{m+1} otherwise, with v = 1/r² + 1/t.
double comparison_rhs(const Params& p, double barrier, double t);

// ---- shrinking round sphere, closed form --------------------------------

/// (∂_t - Δ_{g(t)})B at geodesic distance s from the pole at time t on
/// g(t) = (1 - 2(n-1)t) g_{S^n}, where s = sqrt(scale) θ moves with the flow.
double sphere_heat_operator(const Params& p, int n, double s, double t);

/// Smallest α making (∂_t - Δ)Ψ_m >= -Ψ_m² at (s, t): max(0, -L(φ)/φ²) with φ = Ψ_m / α.
double sphere_required_alpha(const Params& p, int n, double s, double t);

struct Sample {
  double s;
  double t;
};

/// nt x ns samples inside the curvature-hypothesis window of Ψ_m
/// (Ric <= (n-1)/r² for m = 1, |Rm| <= 1/r² otherwise), t in (0, t_max],
/// s in [0, support radius).
std::vector<Sample> sphere_window(int n, double r, int m, int nt, int ns);

struct AnalyticReport {
  std::size_t samples = 0;
  double worst_relative = 0.0;  // min over samples of (lhs - rhs) / max(1, |lhs| + |rhs|)
  Sample worst{};
  double tolerance = 0.0;
  bool pass() const { return worst_relative >= -tolerance; }
};
AnalyticReport check_sphere(const Params& p, int n, const std::vector<Sample>& samples, double tolerance);

/// Smallest α in [lo, hi] accepted by a predicate that is monotone in α
/// (false below a threshold, true above), to relative precision rel_tol.
double calibrate_alpha(const std::function<bool(double)>& accepts, double lo, double hi, double rel_tol = 1e-10);

// ---- grid path ----------------------------------------------------------

/// Points of `region` where the distance field is locally smooth: one-sided
/// and centered second differences of d² along each axis agree to within 10x
/// their median disagreement over the region (with a rounding floor). d² rather than d, because d² is
/// smooth at x0. The stencil reaches two cells each way.
Mask smooth_distance_mask(const ScalarField& distance, const Mask& region);

struct GridReport {
  std::size_t checked = 0;
  std::size_t skipped = 0;      // cut-locus or stencil leaving the support
  double sup_violation = 0.0;   // max of (rhs - lhs)_+
  double sup_relative = 0.0;    // max of (rhs - lhs)_+ / (|lhs| + |rhs|)
  double argmax_t = 0.0;
  GridIndex argmax{};
  double tolerance = 0.0;
  bool pass() const { return sup_relative <= tolerance; }
};

/// (∂_t - Δ)B >= rhs on interior snapshots of the trajectory. d_t is the shot
/// distance on each snapshot's metric, ∂_t d is a centered time difference,
/// and Δ_g B = B_ss + B_s Δ_g d with Δ_g d from the Jacobi field.
GridReport check_grid(const flow::FlowTrajectory& trajectory, GridIndex x0, const Params& p, double tolerance);

}  // namespace rhl::barrier
