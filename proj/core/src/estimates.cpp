#include "rhl/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rhl/errors.hpp"
#include "rhl/geometry.hpp"
#include "rhl/text.hpp"

namespace rhl::estimate {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ScalarField derivative_norm(const ConformalMetric& metric, const ScalarField& u, int k) {
  return geom::tensor_norm(metric, geom::covariant_derivative_power(metric, u, k));
}

// Running sup of a ratio with its location.
struct Sup {
  EstimateReport& rep;
  const GridSpec& spec;

  void offer(double ratio, std::size_t cell, double t) {
    if (std::isnan(ratio)) ratio = kInf;
    ++rep.points;
    if (ratio > rep.sup_ratio || (rep.points == 1 && ratio >= rep.sup_ratio)) {
      rep.sup_ratio = ratio;
      rep.argmax = spec.point(cell);
      rep.argmax_x = spec.x(rep.argmax.i);
      rep.argmax_y = spec.y(rep.argmax.j);
      rep.argmax_t = t;
    }
  }
};

EstimateReport make_report(const std::string& id, double r, double a, int k, double constant) {
  EstimateReport rep;
  rep.scenario = "unnamed";
  rep.id = id;
  rep.r = r;
  rep.a = a;
  rep.k = k;
  rep.constant_used = constant;
  return rep;
}

void require_ball(const flow::FlowTrajectory& traj, const ParabolicBall& ball) {
  if (ball.size() > traj.size() || !(traj.spec() == ball.distance(0).spec())) {
    throw InvalidArgument("parabolic ball does not belong to this trajectory");
  }
}

EstimateReport derivative_check(const flow::FlowTrajectory& traj, const ParabolicBall& ball, double a, int k,
                                double C, const std::string& id) {
  require_ball(traj, ball);
  if (!(a > 0.0)) throw InvalidArgument("solution bound a must be positive");
  if (k >= geom::kDefaultMaxRank) throw UnsupportedRank(k + 1, geom::kDefaultMaxRank);
  const double r = ball.r();
  EstimateReport rep = make_report(id, r, a, k, C);
  rep.flags = hypothesis_flags(traj, ball, a, k == 1);
  const double radius = r / std::ldexp(1.0, k);
  Sup sup{rep, traj.spec()};
  bool first = true;
  for (std::size_t n = 0; n < ball.size(); ++n) {
    const double t = traj[n].t();
    if (!(t > 0.0)) continue;
    if (first) rep.t_min = t;
    first = false;
    const Mask m = ball.sub_mask(n, radius);
    const ScalarField norm = derivative_norm(traj[n].metric, traj[n].u, k);
    const double rate = a * (std::pow(r, -k) + std::pow(t, -0.5 * k));
    for (std::size_t c = 0; c < m.size(); ++c) {
      if (m[c]) sup.offer(norm[c] / rate, c, t);
    }
  }
  return rep;
}

}  // namespace

unsigned hypothesis_flags(const flow::FlowTrajectory& traj, const ParabolicBall& ball, double a, bool ricci_only) {
  unsigned flags = ball.wraps() ? kWraps : 0u;
  const double limit = 1.0 / (ball.r() * ball.r());
  for (std::size_t n = 0; n < ball.size(); ++n) {
    const Mask& m = ball.mask(n);
    const ScalarField R = geom::scalar_curvature(traj[n].metric);
    const ScalarField& u = traj[n].u;
    for (std::size_t c = 0; c < m.size(); ++c) {
      if (!m[c]) continue;
      if (a >= 0.0 && !(std::abs(u[c]) <= a)) flags |= kBound;
      const double curv = ricci_only ? 0.5 * R[c] : std::abs(R[c]);
      if (curv > limit) flags |= kCurvature;
    }
  }
  return flags;
}

Mask ParabolicBall::sub_mask(std::size_t n, double radius) const { return geom::ball_mask(distance_[n], radius); }

double loop_length_through(const ConformalMetric& metric, GridIndex x0) {
  const GridSpec& s = metric.spec();
  const GridSpec big(3 * s.nx(), 3 * s.ny(), 3.0 * s.lx(), 3.0 * s.ly());
  ScalarField f(big);
  for (int j = 0; j < big.ny(); ++j)
    for (int i = 0; i < big.nx(); ++i) f(i, j) = metric.f()(i, j);
  const GridIndex centre{x0.i + s.nx(), x0.j + s.ny()};
  const ScalarField d = geom::geodesic_distance(ConformalMetric(std::move(f)), centre);
  double best = kInf;
  for (int b = -1; b <= 1; ++b)
    for (int a = -1; a <= 1; ++a)
      if (a != 0 || b != 0) best = std::min(best, d(centre.i + a * s.nx(), centre.j + b * s.ny()));
  return best;
}

ParabolicBall parabolic_ball(const flow::FlowTrajectory& trajectory, GridIndex x0, double r, double T) {
  if (!(r > 0.0)) throw InvalidArgument("parabolic ball radius must be positive");
  if (T > trajectory.final_time() * (1.0 + 1e-12)) throw InvalidArgument("ball time exceeds the trajectory");
  ParabolicBall ball;
  ball.x0_ = x0;
  ball.r_ = r;
  ball.T_ = T;
  for (const flow::Snapshot& snap : trajectory.snapshots()) {
    if (snap.t() > T * (1.0 + 1e-12) + 1e-300) break;
    ball.distance_.push_back(geom::geodesic_distance(snap.metric, x0));
    ball.masks_.push_back(geom::ball_mask(ball.distance_.back(), r));
    ball.loop_.push_back(loop_length_through(snap.metric, x0));
    if (r >= 0.5 * ball.loop_.back()) ball.wraps_ = true;
  }
  return ball;
}

std::string flag_names(unsigned flags) {
  static const char* names[] = {"curvature", "bound", "wraps", "ledger", "initial-slice"};
  std::string out;
  for (int b = 0; b < 5; ++b) {
    if (!(flags & (1u << b))) continue;
    if (!out.empty()) out += '|';
    out += names[b];
  }
  return out.empty() ? "none" : out;
}

std::string csv_header() {
  return "scenario,estimate,r,a,k,sup_ratio,constant_used,pass,flags,argmax_t,argmax_x,argmax_y";
}

std::string csv_row(const EstimateReport& r) {
  using text::number;
  return text::csv_field(r.scenario) + ',' + r.id + ',' + number(r.r) + ',' + number(r.a) + ',' +
         std::to_string(r.k) + ',' + number(r.sup_ratio) + ',' + number(r.constant_used) + ',' +
         (r.pass() ? "true" : "false") + ',' + flag_names(r.flags) + ',' + number(r.argmax_t) + ',' +
         number(r.argmax_x) + ',' + number(r.argmax_y);
}

EstimateReport check_gradient(const flow::FlowTrajectory& trajectory, const ParabolicBall& ball, double a, double C1) {
  return derivative_check(trajectory, ball, a, 1, C1, "gradient");
}

EstimateReport check_hessian(const flow::FlowTrajectory& trajectory, const ParabolicBall& ball, double a, double C2) {
  return derivative_check(trajectory, ball, a, 2, C2, "hessian");
}

EstimateReport check_higher(const flow::FlowTrajectory& trajectory, const ParabolicBall& ball, double a, int k,
                            double Ck) {
  if (k < 2) throw InvalidArgument("higher-order check needs k >= 2");
  return derivative_check(trajectory, ball, a, k, Ck, "higher");
}

EstimateReport check_time_uniform(const flow::FlowTrajectory& trajectory, const ParabolicBall& ball, double a, int k,
                                  double C) {
  require_ball(trajectory, ball);
  if (k < 1 || k > 2) throw InvalidArgument("time-uniform mode covers k = 1 and k = 2");
  if (!(a > 0.0)) throw InvalidArgument("solution bound a must be positive");
  const double r = ball.r();
  EstimateReport rep = make_report(k == 1 ? "gradient-uniform" : "hessian-uniform", r, a, k, C);
  rep.flags = hypothesis_flags(trajectory, ball, a, k == 1);
  for (int j = 1; j <= k; ++j) {
    const ScalarField n0 = derivative_norm(trajectory[0].metric, trajectory[0].u, j);
    const Mask& m = ball.mask(0);
    for (std::size_t c = 0; c < m.size(); ++c)
      if (m[c] && n0[c] > a * std::pow(r, -j)) rep.flags |= kInitialSlice;
  }
  const double radius = r / std::ldexp(1.0, k);
  const double rate = a * std::pow(r, -k);
  rep.t_min = trajectory[0].t();
  Sup sup{rep, trajectory.spec()};
  for (std::size_t n = 0; n < ball.size(); ++n) {
    const Mask m = ball.sub_mask(n, radius);
    const ScalarField norm = derivative_norm(trajectory[n].metric, trajectory[n].u, k);
    for (std::size_t c = 0; c < m.size(); ++c)
      if (m[c]) sup.offer(norm[c] / rate, c, trajectory[n].t());
  }
  return rep;
}

EstimateReport check_shi_curvature(const flow::FlowTrajectory& trajectory, const ParabolicBall& ball, int i,
                                   double C_prime) {
  require_ball(trajectory, ball);
  if (i < 1 || i > geom::kDefaultMaxRank - 2) throw UnsupportedRank(i + 2, geom::kDefaultMaxRank);
  const double r = ball.r();
  EstimateReport rep = make_report("shi", r, 0.0, i, C_prime);
  rep.flags = hypothesis_flags(trajectory, ball, -1.0, false);
  Sup sup{rep, trajectory.spec()};
  bool first = true;
  for (std::size_t n = 0; n < ball.size(); ++n) {
    const double t = trajectory[n].t();
    if (!(t > 0.0)) continue;
    if (first) rep.t_min = t;
    first = false;
    const Mask m = ball.sub_mask(n, 0.5 * r);
    const ScalarField norm = geom::curvature_derivative_norm(trajectory[n].metric, i);
    const double rate = (std::pow(r, -i) + std::pow(t, -0.5 * i)) / (r * r);
    for (std::size_t c = 0; c < m.size(); ++c)
      if (m[c]) sup.offer(norm[c] / rate, c, t);
  }
  return rep;
}

double empirical_constant(const flow::FlowTrajectory& trajectory, const ParabolicBall& ball, double a, int k) {
  return derivative_check(trajectory, ball, a, k, 0.0, "empirical").sup_ratio;
}

EstimateReport check_zhang(const flow::FlowTrajectory& trajectory, double a) {
  if (!(a > 0.0)) throw InvalidArgument("solution bound a must be positive");
  EstimateReport rep = make_report("zhang", 0.0, a, 1, 1.0);
  Sup sup{rep, trajectory.spec()};
  bool first = true;
  for (std::size_t n = 0; n < trajectory.size(); ++n) {
    const double t = trajectory[n].t();
    const ScalarField& u = trajectory[n].u;
    for (std::size_t c = 0; c < u.size(); ++c)
      if (!(u[c] > 0.0) || u[c] > a) rep.flags |= kBound;
    if (!(t > 0.0)) continue;
    if (first) rep.t_min = t;
    first = false;
    const ScalarField grad = derivative_norm(trajectory[n].metric, u, 1);
    for (std::size_t c = 0; c < u.size(); ++c) {
      if (!(u[c] > 0.0) || u[c] > a) continue;
      const double lhs = grad[c] / u[c];
      const double rhs = std::sqrt(std::log(a / u[c]) / t);
      sup.offer(lhs == 0.0 ? 0.0 : lhs / rhs, c, t);
    }
  }
  return rep;
}

EstimateReport check_laplacian_bound(const flow::FlowTrajectory& trajectory, double a, double B) {
  if (!(a > 0.0)) throw InvalidArgument("solution bound a must be positive");
  EstimateReport rep = make_report("laplacian", 0.0, a, 2, B);
  Sup sup{rep, trajectory.spec()};
  bool first = true;
  for (std::size_t n = 0; n < trajectory.size(); ++n) {
    const double t = trajectory[n].t();
    const ConformalMetric& g = trajectory[n].metric;
    const ScalarField& u = trajectory[n].u;
    for (std::size_t c = 0; c < u.size(); ++c)
      if (!(u[c] > 0.0) || u[c] > a) rep.flags |= kBound;
    if (!(t > 0.0)) continue;
    if (first) rep.t_min = t;
    first = false;
    const ScalarField lap = geom::laplace_beltrami(g, u);
    const ScalarField grad2 = geom::tensor_norm_squared(g, geom::covariant_derivative(g, u));
    const ScalarField R = geom::scalar_curvature(g);
    for (std::size_t c = 0; c < u.size(); ++c) {
      if (!(u[c] > 0.0) || u[c] > a) continue;
      sup.offer((std::abs(lap[c]) + grad2[c] / u[c] - a * R[c]) * t / a, c, t);
    }
  }
  return rep;
}

}  // namespace rhl::estimate
