#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/numeric/odeint/integrate/integrate_n_steps.hpp>
#include <boost/numeric/odeint/stepper/runge_kutta4.hpp>

#include "rhl/errors.hpp"
#include "rhl/geometry.hpp"

namespace rhl::geom {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Periodic Catmull-Rom bicubic: value and gradient.
class PeriodicCubic {
 public:
  explicit PeriodicCubic(const ScalarField& v) : v_(v) {}

  std::array<double, 3> operator()(double x, double y) const {
    const GridSpec& s = v_.spec();
    const double gx = x / s.hx();
    const double gy = y / s.hy();
    const double fx = std::floor(gx);
    const double fy = std::floor(gy);
    double wx[4], dx[4], wy[4], dy[4];
    weights(gx - fx, wx, dx);
    weights(gy - fy, wy, dy);
    const int i0 = static_cast<int>(fx) - 1;
    const int j0 = static_cast<int>(fy) - 1;
    double val = 0.0, vx = 0.0, vy = 0.0;
    for (int b = 0; b < 4; ++b) {
      double row = 0.0, rowx = 0.0;
      for (int a = 0; a < 4; ++a) {
        const double c = v_(i0 + a, j0 + b);
        row += wx[a] * c;
        rowx += dx[a] * c;
      }
      val += wy[b] * row;
      vx += wy[b] * rowx;
      vy += dy[b] * row;
    }
    return {val, vx / s.hx(), vy / s.hy()};
  }

 private:
  static void weights(double t, double* w, double* d) {
    const double t2 = t * t, t3 = t2 * t;
    w[0] = 0.5 * (-t3 + 2 * t2 - t);
    w[1] = 0.5 * (3 * t3 - 5 * t2 + 2);
    w[2] = 0.5 * (-3 * t3 + 4 * t2 + t);
    w[3] = 0.5 * (t3 - t2);
    d[0] = 0.5 * (-3 * t2 + 4 * t - 1);
    d[1] = 0.5 * (9 * t2 - 10 * t);
    d[2] = 0.5 * (-9 * t2 + 8 * t + 1);
    d[3] = 0.5 * (3 * t2 - 2 * t);
  }

  const ScalarField& v_;
};

// (x, y, direction angle, J, J') along arclength.
using State = std::array<double, 5>;

struct GeodesicSystem {
  const PeriodicCubic& f;
  const PeriodicCubic& k;

  void operator()(const State& q, State& dq, double /*s*/) const {
    const auto [fv, fx, fy] = f(q[0], q[1]);
    const double e = std::exp(-fv);
    const double c = std::cos(q[2]), sn = std::sin(q[2]);
    dq[0] = e * c;
    dq[1] = e * sn;
    dq[2] = e * (-sn * fx + c * fy);
    dq[3] = q[4];
    dq[4] = -k(q[0], q[1])[0] * q[3];
  }
};

double wrap(double d, double period) { return d - period * std::round(d / period); }

}  // namespace

ShotDistance shot_distance(const ConformalMetric& metric, GridIndex x0, double radius) {
  const GridSpec& s = metric.spec();
  if (x0.i < 0 || x0.i >= s.nx() || x0.j < 0 || x0.j >= s.ny()) throw InvalidArgument("source point outside grid");
  if (!(radius > 0.0)) throw InvalidArgument("shooting radius must be positive");

  ScalarField curvature = scalar_curvature(metric);
  curvature *= 0.5;
  const PeriodicCubic fi(metric.f());
  const PeriodicCubic ki(curvature);
  const GeodesicSystem system{fi, ki};
  boost::numeric::odeint::runge_kutta4<State> stepper;

  const double h = std::min(s.hx(), s.hy());
  const double fmin = metric.f().min();
  const double ds = 0.25 * h * std::exp(fmin);
  const double sx = s.x(x0.i), sy = s.y(x0.j);

  auto shoot = [&](double theta, double length, int steps) {
    State q{sx, sy, theta, 0.0, 1.0};
    if (steps > 0) boost::numeric::odeint::integrate_n_steps(stepper, system, q, 0.0, length / steps, steps);
    return q;
  };

  // Fan: ray endpoints at most h/2 apart in the flat picture.
  const double reach = 1.05 * radius + 2.0 * ds;
  const int rays = std::max(64, static_cast<int>(std::ceil(2.0 * std::numbers::pi * reach * std::exp(-fmin) / (0.5 * h))));
  const int fan_steps = static_cast<int>(std::ceil(reach / ds));

  // For each node, per ray, the closest sample (step index, flat distance²).
  struct Hit {
    int ray;
    int step;
    double dist2;
  };
  std::vector<std::vector<Hit>> hits(s.size());
  for (int r = 0; r < rays; ++r) {
    const double theta = 2.0 * std::numbers::pi * r / rays;
    State q{sx, sy, theta, 0.0, 1.0};
    for (int k = 1; k <= fan_steps; ++k) {
      stepper.do_step(system, q, 0.0, ds);
      if (q[3] <= 0.0) break;  // past a conjugate point
      const int ci = static_cast<int>(std::lround(q[0] / s.hx()));
      const int cj = static_cast<int>(std::lround(q[1] / s.hy()));
      for (int b = -1; b <= 1; ++b) {
        for (int a = -1; a <= 1; ++a) {
          const std::size_t node = s.index(ci + a, cj + b);
          const GridIndex p = s.point(node);
          const double ex = wrap(s.x(p.i) - q[0], s.lx());
          const double ey = wrap(s.y(p.j) - q[1], s.ly());
          const double d2 = ex * ex + ey * ey;
          auto& list = hits[node];
          if (!list.empty() && list.back().ray == r) {
            if (d2 < list.back().dist2) list.back() = {r, k, d2};
          } else {
            list.push_back({r, k, d2});
          }
        }
      }
    }
  }

  ShotDistance out{ScalarField(s, kInf), ScalarField(s, kNaN)};
  const std::size_t source = s.index(x0);
  out.distance[source] = 0.0;
  const double tol = 1e-11 * h;

  for (std::size_t node = 0; node < s.size(); ++node) {
    if (node == source || hits[node].empty()) continue;
    const GridIndex p = s.point(node);
    const double tx = s.x(p.i), ty = s.y(p.j);
    auto& list = hits[node];
    // Runs of consecutive rays approximate one geodesic family; refine the
    // best member of each run.
    std::vector<Hit> seeds;
    for (std::size_t a = 0; a < list.size(); ++a) {
      const bool starts = a == 0 || list[a].ray != list[a - 1].ray + 1;
      if (starts) seeds.push_back(list[a]);
      else if (list[a].dist2 < seeds.back().dist2) seeds.back() = list[a];
    }
    if (seeds.size() > 1 && list.front().ray == 0 && list.back().ray == rays - 1) {
      if (seeds.front().dist2 < seeds.back().dist2) seeds.back() = seeds.front();
      seeds.erase(seeds.begin());
    }

    double best = kInf, best_lap = kNaN;
    for (const Hit& seed : seeds) {
      double theta = 2.0 * std::numbers::pi * seed.ray / rays;
      double length = seed.step * ds;
      const int steps = std::max(1, static_cast<int>(std::ceil(1.2 * length / ds)));
      bool converged = false;
      State q{};
      for (int it = 0; it < 40; ++it) {
        q = shoot(theta, length, steps);
        if (!(q[3] > 0.0)) break;
        const double ex = wrap(tx - q[0], s.lx());
        const double ey = wrap(ty - q[1], s.ly());
        if (std::hypot(ex, ey) <= tol) {
          converged = true;
          break;
        }
        const double ef = std::exp(fi(q[0], q[1])[0]);
        const double c = std::cos(q[2]), sn = std::sin(q[2]);
        const double along = ef * (ex * c + ey * sn);
        const double across = ef * (-ex * sn + ey * c) / q[3];
        theta += std::clamp(across, -0.1, 0.1);
        length = std::max(0.5 * length, length + along);
      }
      if (converged && length < best) {
        best = length;
        best_lap = q[4] / q[3];
      }
    }
    if (best <= radius) {
      out.distance[node] = best;
      out.laplacian[node] = best_lap;
    }
  }
  return out;
}

}  // namespace rhl::geom
