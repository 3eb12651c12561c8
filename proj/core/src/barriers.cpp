#include "rhl/barriers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rhl/errors.hpp"
#include "rhl/geometry.hpp"

namespace rhl::barrier {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Derivatives of B(s, t) in s and t.
struct Jet {
  double b;
  double bs;
  double bss;
  double bt;
};

Jet jet(const Params& p, double s, double t) {
  const double v = psi(p, s);
  const double v1 = psi_s(p, s);
  const double v2 = psi_ss(p, s);
  if (p.kind == Kind::Psi) return {v, v1, v2, 0.0};
  const int m = p.m;
  const double pm1 = std::pow(v, m - 1);
  const double pm2 = m >= 2 ? std::pow(v, m - 2) : 0.0;
  return {p.beta * pm1 * v + p.gamma / std::pow(t, m), p.beta * m * pm1 * v1,
          p.beta * m * ((m - 1) * pm2 * v1 * v1 + pm1 * v2), -m * p.gamma / std::pow(t, m + 1)};
}

void require_valid(const Params& p) {
  if (p.m < 1) throw InvalidArgument("barrier index must be at least 1");
  if (!(p.r > 0.0) || !(p.alpha > 0.0)) throw InvalidArgument("barrier needs r, alpha > 0");
}

}  // namespace

double Params::rho() const { return r * r / std::pow(4.0, m - 1); }
double Params::support_radius() const { return r / std::pow(2.0, m - 1); }

const char* kind_name(const Params& p) {
  static const char* names[2][4] = {{"Psi1", "Psi2", "Psi3", "Psi4"}, {"Phi1", "Phi2", "Phi3", "Phi4"}};
  const int m = std::clamp(p.m, 1, 4);
  return names[p.kind == Kind::Phi ? 1 : 0][m - 1];
}

double psi(const Params& p, double s) {
  const double w = p.rho() - s * s;
  if (!(w > 0.0)) return kInf;
  return p.alpha * p.r * p.r / (w * w);
}

double psi_s(const Params& p, double s) {
  const double w = p.rho() - s * s;
  if (!(w > 0.0)) return kInf;
  return 4.0 * p.alpha * p.r * p.r * s / (w * w * w);
}

double psi_ss(const Params& p, double s) {
  const double w = p.rho() - s * s;
  if (!(w > 0.0)) return kInf;
  const double c = p.alpha * p.r * p.r;
  return 4.0 * c / (w * w * w) + 24.0 * c * s * s / (w * w * w * w);
}

double value(const Params& p, double s, double t) {
  require_valid(p);
  const double v = psi(p, s);
  if (p.kind == Kind::Psi || !std::isfinite(v)) return v;
  if (!(t > 0.0)) throw InvalidArgument("Phi barriers need t > 0");
  return p.beta * std::pow(v, p.m) + p.gamma / std::pow(t, p.m);
}

ScalarField evaluate(const Params& p, const ScalarField& distance, double t) {
  ScalarField out(distance.spec());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = value(p, distance[k], t);
  return out;
}

double comparison_rhs(const Params& p, double barrier, double t) {
  if (p.kind == Kind::Psi || p.m == 1) return -barrier * barrier;
  const double v = 1.0 / (p.r * p.r) + 1.0 / t;
  return -barrier * barrier / std::pow(v, p.m - 1) + std::pow(v, p.m + 1);
}

double sphere_heat_operator(const Params& p, int n, double s, double t) {
  require_valid(p);
  const double scale = 1.0 - 2.0 * (n - 1) * t;
  if (!(scale > 0.0)) throw DomainError("sphere sample past the blowup time");
  const double root = std::sqrt(scale);
  const double theta = s / root;
  const Jet j = jet(p, s, t);
  const double ds_dt = -(n - 1) * s / scale;
  // Radial term (n-1) cot θ / sqrt(scale) B_s; at the pole it tends to (n-1) B_ss.
  const double radial = theta > 1e-300 ? (n - 1) * std::cos(theta) / std::sin(theta) / root * j.bs
                                       : (n - 1) * j.bss;
  const double lap = j.bss + radial;
  return j.bs * ds_dt + j.bt - lap;
}

double sphere_required_alpha(const Params& p, int n, double s, double t) {
  Params unit = p;
  unit.kind = Kind::Psi;
  unit.alpha = 1.0;
  const double l = sphere_heat_operator(unit, n, s, t);
  const double phi = psi(unit, s);
  return std::max(0.0, -l / (phi * phi));
}

std::vector<Sample> sphere_window(int n, double r, int m, int nt, int ns) {
  if (n < 2 || nt < 1 || ns < 1 || !(r > 0.0)) throw InvalidArgument("bad sphere window");
  const double nd = n;
  const double scale_min = m == 1 ? r * r : r * r * std::sqrt(2.0 * nd * (nd - 1.0));
  if (!(scale_min < 1.0)) throw InvalidArgument("radius too large for the curvature window");
  const double t_max = (1.0 - scale_min) / (2.0 * (nd - 1.0));
  const double support = r / std::pow(2.0, m - 1);
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(nt) * ns);
  for (int i = 0; i < nt; ++i) {
    const double t = t_max * (i + 1) / nt;
    for (int j = 0; j < ns; ++j) out.push_back({support * j / ns, t});
  }
  return out;
}

AnalyticReport check_sphere(const Params& p, int n, const std::vector<Sample>& samples, double tolerance) {
  AnalyticReport rep;
  rep.tolerance = tolerance;
  rep.worst_relative = kInf;
  for (const Sample& smp : samples) {
    const double lhs = sphere_heat_operator(p, n, smp.s, smp.t);
    const double rhs = comparison_rhs(p, value(p, smp.s, smp.t), smp.t);
    const double rel = (lhs - rhs) / std::max(1.0, std::abs(lhs) + std::abs(rhs));
    if (rel < rep.worst_relative) {
      rep.worst_relative = rel;
      rep.worst = smp;
    }
    ++rep.samples;
  }
  if (rep.samples == 0) rep.worst_relative = 0.0;
  return rep;
}

double calibrate_alpha(const std::function<bool(double)>& accepts, double lo, double hi, double rel_tol) {
  if (!(lo > 0.0) || !(hi > lo)) throw InvalidArgument("calibration bracket must satisfy 0 < lo < hi");
  if (accepts(lo)) return lo;
  int grow = 0;
  while (!accepts(hi)) {
    lo = hi;
    hi *= 2.0;
    if (++grow > 60) throw Error("alpha calibration found no accepting value");
  }
  while ((hi - lo) > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    (accepts(mid) ? hi : lo) = mid;
  }
  return hi;
}

Mask smooth_distance_mask(const ScalarField& distance, const Mask& region) {
  const GridSpec& s = distance.spec();
  std::vector<double> disagreement(s.size(), kInf);
  std::vector<double> finite_values;
  std::vector<double> curvatures;
  for (int j = 0; j < s.ny(); ++j) {
    for (int i = 0; i < s.nx(); ++i) {
      const std::size_t k = s.index(i, j);
      if (!region[k]) continue;
      auto q = [&](int di, int dj) {
        const double d = distance(i + di, j + dj);
        return d * d;
      };
      const double xp = q(2, 0) - 2.0 * q(1, 0) + q(0, 0);
      const double xm = q(0, 0) - 2.0 * q(-1, 0) + q(-2, 0);
      const double yp = q(0, 2) - 2.0 * q(0, 1) + q(0, 0);
      const double ym = q(0, 0) - 2.0 * q(0, -1) + q(0, -2);
      // A kink sitting exactly on the node is symmetric, so the one-sided
      // differences agree there; the centered one still differs from both.
      const double xc = q(1, 0) - 2.0 * q(0, 0) + q(-1, 0);
      const double yc = q(0, 1) - 2.0 * q(0, 0) + q(0, -1);
      const double dis = std::max({std::abs(xp - xm), std::abs(yp - ym), std::abs(xc - xp), std::abs(xc - xm),
                                   std::abs(yc - yp), std::abs(yc - ym)});
      if (!std::isfinite(dis)) continue;
      disagreement[k] = dis;
      finite_values.push_back(dis);
      curvatures.push_back(std::max(std::abs(xp), std::abs(yp)));
    }
  }
  Mask out(s.size(), 0);
  if (finite_values.empty()) return out;
  auto median = [](std::vector<double>& v) {
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
  };
  // Floor at sqrt(eps) of a typical second difference, so rounding noise in
  // an exactly quadratic d² is not mistaken for a kink.
  const double floor = 1.5e-8 * median(curvatures);
  const double cutoff = std::max(10.0 * median(finite_values), floor);
  for (std::size_t k = 0; k < s.size(); ++k) out[k] = region[k] && disagreement[k] <= cutoff ? 1 : 0;
  return out;
}

GridReport check_grid(const flow::FlowTrajectory& trajectory, GridIndex x0, const Params& p, double tolerance) {
  require_valid(p);
  if (trajectory.size() < 3) throw InvalidArgument("barrier check needs at least three snapshots");
  const GridSpec& s = trajectory.spec();
  const double gap = trajectory.spacing();
  const double support = p.support_radius();

  std::vector<geom::ShotDistance> dist;
  dist.reserve(trajectory.size());
  // Shoot past the support so the cut-locus stencil (two cells each way) stays finite at its edge.
  for (const flow::Snapshot& snap : trajectory.snapshots()) {
    const double margin = 2.5 * s.h() * std::exp(snap.metric.f().max());
    dist.push_back(geom::shot_distance(snap.metric, x0, support + margin));
  }

  GridReport rep;
  rep.tolerance = tolerance;
  const std::size_t source = s.index(x0);
  for (std::size_t n = 1; n + 1 < trajectory.size(); ++n) {
    const double t = trajectory[n].t();
    if (p.kind == Kind::Phi && !(trajectory[n - 1].t() > 0.0)) continue;
    const ScalarField& d = dist[n].distance;
    Mask support_mask(s.size(), 0);
    for (std::size_t k = 0; k < s.size(); ++k) support_mask[k] = d[k] < support ? 1 : 0;
    const Mask smooth = smooth_distance_mask(d, support_mask);

    for (std::size_t k = 0; k < s.size(); ++k) {
      if (!support_mask[k]) continue;
      const double dp = dist[n - 1].distance[k];
      const double dn = dist[n + 1].distance[k];
      if (!smooth[k] || !(dp < support) || !(dn < support)) {
        ++rep.skipped;
        continue;
      }
      // B = B(d, t) with |∇d| = 1, so Δ_g B = B_ss + B_s Δ_g d; at x0, Δ_g B = 2 B_ss.
      const Jet j = jet(p, d[k], t);
      const double lap = k == source ? 2.0 * j.bss : j.bss + j.bs * dist[n].laplacian[k];
      const double lhs = j.bs * (dn - dp) / (2.0 * gap) + j.bt - lap;
      const double rhs = comparison_rhs(p, j.b, t);
      const double viol = std::max(0.0, rhs - lhs);
      const double rel = viol / std::max(std::abs(lhs) + std::abs(rhs), std::numeric_limits<double>::min());
      ++rep.checked;
      rep.sup_violation = std::max(rep.sup_violation, viol);
      if (rel > rep.sup_relative) {
        rep.sup_relative = rel;
        rep.argmax = s.point(k);
        rep.argmax_t = t;
      }
    }
  }
  return rep;
}

}  // namespace rhl::barrier
