#pragma once

#include <functional>
#include <vector>

#include "rhl/constants.hpp"
#include "rhl/estimates.hpp"
#include "rhl/flows.hpp"

namespace rhl::identity {

/// Discrete (∂_t - Δ_g) of a per-snapshot field at interior snapshot n:
/// centered difference across n ± 1 minus the Laplace-Beltrami operator of
/// snapshot n.
using SnapshotField = std::function<ScalarField(const flow::Snapshot&)>;
ScalarField heat_operator(const flow::FlowTrajectory& trajectory, std::size_t n, const SnapshotField& field);

struct IdentityResult {
  int k = 0;
  double h = 0.0;
  double spacing = 0.0;       // time between snapshots
  double sup_residual = 0.0;  // sup over M and interior snapshots of |(∂_t - Δ)|∇^k u|² + 2|∇^{k+1} u|²|
  double argmax_t = 0.0;
  GridIndex argmax{};
  // k >= 2: sup of |residual| / Σ_{i<k} |∇^i Rm| |∇^{k-i} u| |∇^k u| over points
  // where the bound is at least kFitFloor times its own sup. 0 when the bound
  // vanishes identically (flat metric).
  double c_fit = 0.0;
  std::size_t fit_points = 0;
  std::size_t checked = 0;

  static constexpr double kFitFloor = 0.1;
};

/// Residual of (∂_t - Δ)|∇^k u|² = -2|∇^{k+1} u|² (+ curvature terms for k >= 2).
/// Needs at least three snapshots; 1 <= k <= K_max - 1.
IdentityResult check_identity_residual(const flow::FlowTrajectory& trajectory, int k);

/// Residuals of one identity at successive refinements, coarse to fine.
struct ConvergenceRecord {
  int k = 0;
  std::vector<IdentityResult> levels;

  // sup_residual[i] / sup_residual[i + 1]
  std::vector<double> ratios() const;
  // log(ratio) / log(h[i] / h[i + 1])
  std::vector<double> orders() const;
};
ConvergenceRecord convergence(int k, const std::vector<const flow::FlowTrajectory*>& levels);

struct BernsteinReport {
  int m = 0;
  double sup_defect = 0.0;  // sup of (LHS - RHS)_+ over the region
  double scale = 0.0;       // measured discretization scale of (∂_t - Δ)F_m
  double tolerance = 0.0;   // 5 x scale
  std::size_t checked = 0;
  unsigned flags = 0;       // estimate::Flag bits
  double argmax_t = 0.0;
  GridIndex argmax{};

  bool pass() const { return sup_defect <= tolerance; }
};

/// (∂_t - Δ)F_m <= RHS on the ball of the order-m argument, interior snapshots:
///   m = 1: F_1 = b_1 (A_1 a² + u²)|∇u|², RHS = -F_1², region PB_r.
///   m >= 2: w = r^{-2(m-1)} + t^{-(m-1)}, v = 1/r² + 1/t,
///           G_m = (A_m a² w + |∇^{m-1} u|²)|∇^m u|², F_m = b_m G_m / v^{m-1},
///           RHS = -F_m² / v^{m-1} + v^{m+1}, region PB_{r/2^{m-1}}.
/// The scale for m = 1 is the sup of |discrete (∂_t - Δ)F_1 - b_1 E| with the
/// exact expansion E = -2(A_1 a² + u²)|∇²u|² - 2|∇u|⁴ - 8u ∇²u(∇u, ∇u). For
/// m >= 2 it is the sup of the difference between the h, Δt operator and the
/// 2h, 2Δt one (stride-two stencils on the same data). Ledger violations and
/// failed hypotheses are flagged before the check runs.
BernsteinReport check_bernstein(const flow::FlowTrajectory& trajectory, const estimate::ParabolicBall& ball,
                                const constants::ConstantLedger& ledger, int m);

}  // namespace rhl::identity
