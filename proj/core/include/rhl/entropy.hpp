#pragma once

#include <span>
#include <string>
#include <vector>

#include "rhl/flows.hpp"
#include "rhl/grid.hpp"

namespace rhl::entropy {

// Smallest admissible value of a positive solution.
inline constexpr double kPositivityFloor = 1e-30;
// Allowed |∫v² dg - 1| for W.
inline constexpr double kNormalizationTolerance = 1e-6;

/// W(g, v, τ) = ∫ [τ(4|∇v|² + R v²) - v² ln v² - (n/2) ln(4πτ) v² - n v²] dg
/// with n = 2 and 0 ln 0 = 0. Throws NormalizationError unless ∫v² dg = 1.
double w_entropy(const ConformalMetric& metric, const ScalarField& v, double tau);

/// P(u) = τ(-2Δu + |∇u|²/u + R u) - u ln u - (n/2) ln(4πτ) u - n u, n = 2.
ScalarField perelman_P(const ConformalMetric& metric, const ScalarField& u, double tau);

/// P of the Euclidean heat kernel u = (4πτ)^{-n/2} e^{-|x|²/4τ} at x ∈ R^n,
/// from closed-form derivatives (n = x.size()).
double gaussian_P(std::span<const double> x, double tau);

/// |Ric - Hess ln u - g/(2τ)|² pointwise (2D: Ric = (R/2) g).
ScalarField soliton_defect_squared(const ConformalMetric& metric, const ScalarField& u, double tau);

struct EntropyRecord {
  double t = 0.0;
  double tau = 0.0;
  double W = 0.0;
  double dW_dt_measured = 0.0;
  double rhs_integral = 0.0;  // 2τ ∫|Ric - Hess ln u - g/(2τ)|² u dg
  double defect() const { return dW_dt_measured - rhs_integral; }
};

std::string csv_header();  // t,tau,W,dW_dt_measured,rhs_integral,defect
std::string csv_row(const EntropyRecord& r);

/// W and the right-hand integral per interior snapshot of a trajectory that
/// carries a conjugate solution u (v = sqrt u, τ = T - t); dW/dt by centered
/// differences. A snapshot is used when τ >= tau_min and its successor still has
/// τ > 0.
std::vector<EntropyRecord> entropy_monotonicity_check(const flow::FlowTrajectory& conjugate, double T,
                                                      double tau_min = 0.0);

/// Largest decrease of W between consecutive records (0 when nondecreasing).
double max_entropy_drop(const std::vector<EntropyRecord>& records);

/// Closed-form records on the shrinking sphere with the constant conjugate
/// density (T = blowup time). dW/dt is the centered difference of the
/// closed-form W over ±step.
EntropyRecord sphere_record(const flow::SphereModel& model, double t, double step = 1e-3);

struct ResidualLevel {
  double h = 0.0;
  double spacing = 0.0;
  double sup_residual = 0.0;
  double argmax_t = 0.0;
  GridIndex argmax{};
  std::size_t checked = 0;
};

/// sup over interior snapshots with τ >= tau_min of
/// |(∂_t + Δ - R) P(u) - 2τ |Ric - Hess ln u - g/(2τ)|² u|.
/// A non-empty `times` restricts the sup to snapshots at those times.
ResidualLevel conjugate_identity_residual(const flow::FlowTrajectory& conjugate, double T, double tau_min,
                                          std::span<const double> times = {});

/// Times of the snapshots conjugate_identity_residual evaluates.
std::vector<double> residual_times(const flow::FlowTrajectory& conjugate, double T, double tau_min);

struct ResidualConvergence {
  std::vector<ResidualLevel> levels;  // coarse to fine
  std::vector<double> ratios() const;
  std::vector<double> orders() const;  // log(ratio) / log(h ratio)
};
/// Every level is evaluated at the snapshot times of the coarsest level.
ResidualConvergence conjugate_convergence(const std::vector<const flow::FlowTrajectory*>& levels, double T,
                                          double tau_min);

}  // namespace rhl::entropy
