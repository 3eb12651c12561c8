#pragma once

#include <string>
#include <vector>

#include "rhl/flows.hpp"
#include "rhl/grid.hpp"

namespace rhl::estimate {

/// PB_r(x0, T): for every snapshot with t <= T, the closed g(t)-ball of
/// radius r about x0 under the lattice distance of that snapshot's metric.
class ParabolicBall {
 public:
  GridIndex x0() const { return x0_; }
  double r() const { return r_; }
  double T() const { return T_; }
  std::size_t size() const { return masks_.size(); }
  const Mask& mask(std::size_t n) const { return masks_[n]; }
  const ScalarField& distance(std::size_t n) const { return distance_[n]; }
  // {d <= radius} at snapshot n, for the concentric sub-balls PB_{r/2}, ...
  Mask sub_mask(std::size_t n, double radius) const;

  // Shortest loop through x0 that winds around the torus, per snapshot.
  const std::vector<double>& loop_length() const { return loop_; }
  // r >= half the loop length at some snapshot: the ball meets itself.
  bool wraps() const { return wraps_; }

 private:
  friend ParabolicBall parabolic_ball(const flow::FlowTrajectory&, GridIndex, double, double);

  GridIndex x0_{};
  double r_ = 0.0;
  double T_ = 0.0;
  std::vector<Mask> masks_;
  std::vector<ScalarField> distance_;
  std::vector<double> loop_;
  bool wraps_ = false;
};

ParabolicBall parabolic_ball(const flow::FlowTrajectory& trajectory, GridIndex x0, double r, double T);

/// Length of the shortest non-contractible lattice loop through x0: the
/// distance from x0 to its nearest periodic image, on a 3x3 tiling.
double loop_length_through(const ConformalMetric& metric, GridIndex x0);

enum Flag : unsigned {
  kCurvature = 1u << 0,     // Ric <= (n-1)/r² or |Rm| <= 1/r² fails on PB_r
  kBound = 1u << 1,         // |u| <= a fails (or u <= 0 where positivity is required)
  kWraps = 1u << 2,         // ball meets itself around the torus
  kLedger = 1u << 3,        // ledger constants violate their constraints
  kInitialSlice = 1u << 4,  // time-uniform mode: initial derivative bound fails
};
std::string flag_names(unsigned flags);  // "curvature|wraps", or "none"

/// Hypotheses on PB_r over every snapshot of the ball: kWraps; kBound when
/// |u| <= a fails (not checked for a < 0); kCurvature when Ric <= 1/r² fails
/// (ricci_only) or |Rm| <= 1/r² fails. In two dimensions Ric = (R/2) g and |Rm| = |R|.
unsigned hypothesis_flags(const flow::FlowTrajectory& trajectory, const ParabolicBall& ball, double a,
                          bool ricci_only);

struct EstimateReport {
  std::string scenario;
  std::string id;
  double r = 0.0;
  double a = 0.0;
  int k = 0;
  double sup_ratio = 0.0;      // sup of measured / rate, with no constant
  double constant_used = 0.0;
  unsigned flags = 0;
  double t_min = 0.0;          // earliest snapshot time included
  double argmax_t = 0.0;
  GridIndex argmax{};
  double argmax_x = 0.0;
  double argmax_y = 0.0;
  std::size_t points = 0;

  bool pass() const { return sup_ratio <= constant_used; }
  // sup_ratio / constant_used: the supremum of measured / bound.
  double normalized() const { return sup_ratio / constant_used; }
};

std::string csv_header();
std::string csv_row(const EstimateReport& r);

/// |∇u| <= C1 a (1/r + 1/sqrt t) on PB_{r/2} \ {t = 0}.
EstimateReport check_gradient(const flow::FlowTrajectory& trajectory, const ParabolicBall& ball, double a, double C1);

/// |∇²u| <= C2 a (1/r² + 1/t) on PB_{r/4} \ {t = 0}.
EstimateReport check_hessian(const flow::FlowTrajectory& trajectory, const ParabolicBall& ball, double a, double C2);

/// |∇^k u| <= Ck a (1/r^k + 1/t^{k/2}) on PB_{r/2^k} \ {t = 0}, 2 <= k <= K_max - 1.
EstimateReport check_higher(const flow::FlowTrajectory& trajectory, const ParabolicBall& ball, double a, int k,
                            double Ck);

/// Time-uniform variant: |∇^k u| <= C a / r^k on all of PB_{r/2^k}, t = 0
/// included. Requires |∇^j u| <= a / r^j on the initial ball for j <= k;
/// flags kInitialSlice otherwise. k in {1, 2}.
EstimateReport check_time_uniform(const flow::FlowTrajectory& trajectory, const ParabolicBall& ball, double a, int k,
                                  double C);

/// |∇^i Rm| <= C' r^{-2} (1/r^i + 1/t^{i/2}) on PB_{r/2} \ {t = 0}, 1 <= i <= K_max - 2.
EstimateReport check_shi_curvature(const flow::FlowTrajectory& trajectory, const ParabolicBall& ball, int i,
                                   double C_prime);

/// Smallest constant for which the order-k check (gradient for k = 1) passes.
double empirical_constant(const flow::FlowTrajectory& trajectory, const ParabolicBall& ball, double a, int k);

/// |∇u|/u <= sqrt(1/t) sqrt(ln(a/u)) on M x (t_min, T], with 0/0 read as 0.
/// Points with u <= 0 or u > a are flagged kBound and skipped.
EstimateReport check_zhang(const flow::FlowTrajectory& trajectory, double a);

/// (|Δu| + |∇u|²/u - aR) t / a <= B on M x (t_min, T].
EstimateReport check_laplacian_bound(const flow::FlowTrajectory& trajectory, double a, double B);

}  // namespace rhl::estimate
