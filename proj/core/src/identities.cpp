#include "rhl/identities.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rhl/errors.hpp"
#include "rhl/geometry.hpp"

namespace rhl::identity {
namespace {

ScalarField norm_squared_of_power(const ConformalMetric& metric, const ScalarField& u, int k) {
  return geom::tensor_norm_squared(metric, geom::covariant_derivative_power(metric, u, k));
}

// e^{-2f} times the flat five-point Laplacian on the lattice of spacing 2h.
ScalarField wide_laplace_beltrami(const ConformalMetric& metric, const ScalarField& u) {
  const GridSpec& s = u.spec();
  const double ax = 1.0 / (4.0 * s.hx() * s.hx());
  const double ay = 1.0 / (4.0 * s.hy() * s.hy());
  ScalarField out(s);
  for (int j = 0; j < s.ny(); ++j) {
    for (int i = 0; i < s.nx(); ++i) {
      const double c = u(i, j);
      const double lap = ax * (u(i + 2, j) - 2.0 * c + u(i - 2, j)) + ay * (u(i, j + 2) - 2.0 * c + u(i, j - 2));
      out(i, j) = std::exp(-2.0 * metric.f()(i, j)) * lap;
    }
  }
  return out;
}

void require_snapshots(const flow::FlowTrajectory& traj, std::size_t need) {
  if (traj.size() < need) throw InvalidArgument("trajectory needs at least " + std::to_string(need) + " snapshots");
}

}  // namespace

ScalarField heat_operator(const flow::FlowTrajectory& traj, std::size_t n, const SnapshotField& field) {
  if (n == 0 || n + 1 >= traj.size()) throw InvalidArgument("heat_operator needs an interior snapshot");
  const ScalarField before = field(traj[n - 1]);
  const ScalarField after = field(traj[n + 1]);
  const ScalarField lap = geom::laplace_beltrami(traj[n].metric, field(traj[n]));
  const double dt = traj[n + 1].t() - traj[n - 1].t();
  ScalarField out(lap.spec());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = (after[c] - before[c]) / dt - lap[c];
  return out;
}

IdentityResult check_identity_residual(const flow::FlowTrajectory& traj, int k) {
  if (k < 1 || k > geom::kDefaultMaxRank - 1) throw UnsupportedRank(k + 1, geom::kDefaultMaxRank);
  require_snapshots(traj, 3);

  const std::size_t N = traj.size();
  std::vector<ScalarField> q;
  q.reserve(N);
  for (std::size_t n = 0; n < N; ++n) q.push_back(norm_squared_of_power(traj[n].metric, traj[n].u, k));

  IdentityResult res;
  res.k = k;
  res.h = traj.spec().h();
  res.spacing = traj.spacing();

  struct Sample {
    double residual;
    double bound;
  };
  std::vector<Sample> samples;
  double bound_sup = 0.0;

  for (std::size_t n = 1; n + 1 < N; ++n) {
    const ConformalMetric& g = traj[n].metric;
    const ScalarField& u = traj[n].u;
    const ScalarField lap = geom::laplace_beltrami(g, q[n]);
    const ScalarField next = norm_squared_of_power(g, u, k + 1);
    const double dt = traj[n + 1].t() - traj[n - 1].t();

    ScalarField bound(g.spec());
    if (k >= 2) {
      const ScalarField top = geom::tensor_norm(g, geom::covariant_derivative_power(g, u, k));
      for (int i = 0; i < k; ++i) {
        const ScalarField rm = geom::curvature_derivative_norm(g, i);
        const ScalarField du = geom::tensor_norm(g, geom::covariant_derivative_power(g, u, k - i));
        for (std::size_t c = 0; c < bound.size(); ++c) bound[c] += rm[c] * du[c] * top[c];
      }
    }

    for (std::size_t c = 0; c < lap.size(); ++c) {
      const double r = (q[n + 1][c] - q[n - 1][c]) / dt - lap[c] + 2.0 * next[c];
      const double a = std::abs(r);
      ++res.checked;
      if (a > res.sup_residual) {
        res.sup_residual = a;
        res.argmax_t = traj[n].t();
        res.argmax = g.spec().point(c);
      }
      if (k >= 2) {
        samples.push_back({a, bound[c]});
        bound_sup = std::max(bound_sup, bound[c]);
      }
    }
  }

  if (k >= 2 && bound_sup > 0.0) {
    const double floor = IdentityResult::kFitFloor * bound_sup;
    for (const Sample& s : samples) {
      if (s.bound < floor) continue;
      ++res.fit_points;
      res.c_fit = std::max(res.c_fit, s.residual / s.bound);
    }
  }
  return res;
}

std::vector<double> ConvergenceRecord::ratios() const {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < levels.size(); ++i) out.push_back(levels[i].sup_residual / levels[i + 1].sup_residual);
  return out;
}

std::vector<double> ConvergenceRecord::orders() const {
  std::vector<double> out;
  const std::vector<double> r = ratios();
  for (std::size_t i = 0; i < r.size(); ++i) out.push_back(std::log(r[i]) / std::log(levels[i].h / levels[i + 1].h));
  return out;
}

ConvergenceRecord convergence(int k, const std::vector<const flow::FlowTrajectory*>& levels) {
  if (levels.size() < 2) throw InvalidArgument("convergence needs at least two levels");
  ConvergenceRecord rec;
  rec.k = k;
  for (const flow::FlowTrajectory* t : levels) {
    if (t == nullptr) throw InvalidArgument("null trajectory");
    rec.levels.push_back(check_identity_residual(*t, k));
  }
  return rec;
}

BernsteinReport check_bernstein(const flow::FlowTrajectory& traj, const estimate::ParabolicBall& ball,
                                const constants::ConstantLedger& ledger, int m) {
  if (m < 1 || m > ledger.kmax()) throw UnsupportedRank(m, ledger.kmax());
  if (m + 1 > geom::kDefaultMaxRank) throw UnsupportedRank(m + 1, geom::kDefaultMaxRank);
  require_snapshots(traj, m == 1 ? 3 : 5);

  BernsteinReport rep;
  rep.m = m;
  rep.flags = estimate::hypothesis_flags(traj, ball, ledger.a(), m == 1);
  if (!ledger.violations().empty()) rep.flags |= estimate::kLedger;

  const double a = ledger.a();
  const double r = ball.r();
  const double A = ledger.A(m);
  const double b = ledger.b(m);
  const double region = r / std::pow(2.0, m - 1);

  auto weights = [&](double t, double& w, double& v) {
    w = std::pow(r, -2.0 * (m - 1)) + std::pow(t, -(m - 1.0));
    v = 1.0 / (r * r) + 1.0 / t;
  };

  // F_m at every snapshot (F_m is undefined at t = 0 for m >= 2; left as nan).
  std::vector<ScalarField> F;
  F.reserve(traj.size());
  for (std::size_t n = 0; n < traj.size(); ++n) {
    const ConformalMetric& g = traj[n].metric;
    const ScalarField& u = traj[n].u;
    ScalarField out(g.spec());
    if (m == 1) {
      const ScalarField du2 = norm_squared_of_power(g, u, 1);
      for (std::size_t c = 0; c < out.size(); ++c) out[c] = b * (A * a * a + u[c] * u[c]) * du2[c];
    } else {
      const double t = traj[n].t();
      if (t <= 0.0) {
        for (std::size_t c = 0; c < out.size(); ++c) out[c] = std::numeric_limits<double>::quiet_NaN();
      } else {
        double w, v;
        weights(t, w, v);
        const ScalarField lower = norm_squared_of_power(g, u, m - 1);
        const ScalarField top = norm_squared_of_power(g, u, m);
        const double scale = b / std::pow(v, m - 1);
        for (std::size_t c = 0; c < out.size(); ++c) out[c] = scale * (A * a * a * w + lower[c]) * top[c];
      }
    }
    F.push_back(std::move(out));
  }

  for (std::size_t n = 1; n + 1 < traj.size() && n < ball.size(); ++n) {
    const double t = traj[n].t();
    if (t <= 0.0 || (m >= 2 && traj[n - 1].t() <= 0.0)) continue;
    const ConformalMetric& g = traj[n].metric;
    const ScalarField& u = traj[n].u;
    const Mask mask = ball.sub_mask(n, region);
    const ScalarField lap = geom::laplace_beltrami(g, F[n]);
    const double dt = traj[n + 1].t() - traj[n - 1].t();

    double v = 0.0, w = 0.0;
    if (m >= 2) weights(t, w, v);

    // Scale reference for this snapshot.
    ScalarField reference(g.spec(), std::numeric_limits<double>::quiet_NaN());
    if (m == 1) {
      const ScalarField du2 = norm_squared_of_power(g, u, 1);
      const ScalarField hess2 = norm_squared_of_power(g, u, 2);
      const TensorField du = geom::covariant_derivative(g, u);
      const TensorField hess = geom::covariant_derivative_power(g, u, 2);
      for (std::size_t c = 0; c < reference.size(); ++c) {
        const double e4 = std::exp(-4.0 * g.f()[c]);
        double huu = 0.0;
        for (int p = 0; p < 2; ++p)
          for (int q = 0; q < 2; ++q) huu += hess.at(c, 2 * p + q) * du.at(c, p) * du.at(c, q);
        huu *= e4;
        const double E = -2.0 * (A * a * a + u[c] * u[c]) * hess2[c] - 2.0 * du2[c] * du2[c] - 8.0 * u[c] * huu;
        reference[c] = b * E;
      }
    } else if (n >= 2 && n + 2 < traj.size() && traj[n - 2].t() > 0.0) {
      const ScalarField wide = wide_laplace_beltrami(g, F[n]);
      const double dt2 = traj[n + 2].t() - traj[n - 2].t();
      for (std::size_t c = 0; c < reference.size(); ++c) reference[c] = (F[n + 2][c] - F[n - 2][c]) / dt2 - wide[c];
    }

    for (std::size_t c = 0; c < mask.size(); ++c) {
      if (!mask[c]) continue;
      const double lhs = (F[n + 1][c] - F[n - 1][c]) / dt - lap[c];
      const double f = F[n][c];
      const double rhs = m == 1 ? -f * f : -f * f / std::pow(v, m - 1) + std::pow(v, m + 1);
      ++rep.checked;
      if (std::isfinite(reference[c])) rep.scale = std::max(rep.scale, std::abs(lhs - reference[c]));
      const double defect = std::max(0.0, lhs - rhs);
      if (!(defect <= rep.sup_defect)) {
        rep.sup_defect = std::isnan(defect) ? std::numeric_limits<double>::infinity() : defect;
        rep.argmax_t = t;
        rep.argmax = g.spec().point(c);
      }
    }
  }
  rep.tolerance = 5.0 * rep.scale;
  return rep;
}

}  // namespace rhl::identity
