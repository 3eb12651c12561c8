#include "rhl/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rhl/errors.hpp"
#include "rhl/geometry.hpp"
#include "rhl/text.hpp"

namespace rhl::entropy {
namespace {

constexpr double kDim = 2.0;

void require_tau(double tau) {
  if (!(tau > 0.0)) throw InvalidArgument("tau must be positive, got " + text::number(tau));
}

void require_positive(const ScalarField& u) {
  const double lo = u.min();
  if (!(lo >= kPositivityFloor)) throw HypothesisViolation("u must be positive, min u = " + text::number(lo));
}

// τ < τ_min, ignoring rounding in T - t.
bool below(double tau, double tau_min, double T) { return tau < tau_min - 1e-12 * std::abs(T); }

double log_4pi(double tau) { return std::log(4.0 * std::numbers::pi * tau); }

}  // namespace

double w_entropy(const ConformalMetric& metric, const ScalarField& v, double tau) {
  require_tau(tau);
  ScalarField v2(v.spec());
  for (std::size_t c = 0; c < v.size(); ++c) v2[c] = v[c] * v[c];
  const double mass = geom::integrate(metric, v2);
  if (!(std::abs(mass - 1.0) <= kNormalizationTolerance))
    throw NormalizationError("W needs ∫v² dg = 1, got " + text::number(mass));

  const ScalarField grad2 = geom::tensor_norm_squared(metric, geom::covariant_derivative(metric, v));
  const ScalarField R = geom::scalar_curvature(metric);
  const double lg = log_4pi(tau);
  ScalarField density(v.spec());
  for (std::size_t c = 0; c < v.size(); ++c) {
    const double w = v2[c];
    const double wlogw = w > 0.0 ? w * std::log(w) : 0.0;
    density[c] = tau * (4.0 * grad2[c] + R[c] * w) - wlogw - 0.5 * kDim * lg * w - kDim * w;
  }
  return geom::integrate(metric, density);
}

ScalarField perelman_P(const ConformalMetric& metric, const ScalarField& u, double tau) {
  require_tau(tau);
  require_positive(u);
  const ScalarField lap = geom::laplace_beltrami(metric, u);
  const ScalarField grad2 = geom::tensor_norm_squared(metric, geom::covariant_derivative(metric, u));
  const ScalarField R = geom::scalar_curvature(metric);
  const double lg = log_4pi(tau);
  ScalarField P(u.spec());
  for (std::size_t c = 0; c < u.size(); ++c) {
    const double w = u[c];
    P[c] = tau * (-2.0 * lap[c] + grad2[c] / w + R[c] * w) - w * std::log(w) - 0.5 * kDim * lg * w - kDim * w;
  }
  return P;
}

double gaussian_P(std::span<const double> x, double tau) {
  require_tau(tau);
  const double n = static_cast<double>(x.size());
  double r2 = 0.0;
  for (double xi : x) r2 += xi * xi;
  const double lg = log_4pi(tau);
  const double logu = -0.5 * n * lg - r2 / (4.0 * tau);
  const double u = std::exp(logu);
  // Δu = u (|x|²/4τ² - n/2τ), |∇u|²/u = u |x|²/4τ².
  const double lap = u * (r2 / (4.0 * tau * tau) - n / (2.0 * tau));
  const double grad2_over_u = u * r2 / (4.0 * tau * tau);
  return tau * (-2.0 * lap + grad2_over_u) - u * logu - 0.5 * n * lg * u - n * u;
}

ScalarField soliton_defect_squared(const ConformalMetric& metric, const ScalarField& u, double tau) {
  require_tau(tau);
  require_positive(u);
  ScalarField logu(u.spec());
  for (std::size_t c = 0; c < u.size(); ++c) logu[c] = std::log(u[c]);
  const TensorField H = geom::covariant_derivative_power(metric, logu, 2);
  const ScalarField R = geom::scalar_curvature(metric);
  const ScalarField& f = metric.f();
  ScalarField out(u.spec());
  for (std::size_t c = 0; c < u.size(); ++c) {
    const double g = std::exp(2.0 * f[c]);
    const double lambda = 0.5 * R[c] - 0.5 / tau;
    double sum = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        const double T = (a == b ? lambda * g : 0.0) - H.at(c, 2 * a + b);
        sum += T * T;
      }
    out[c] = sum / (g * g);
  }
  return out;
}

std::string csv_header() { return "t,tau,W,dW_dt_measured,rhs_integral,defect"; }

std::string csv_row(const EntropyRecord& r) {
  using text::number;
  return number(r.t) + ',' + number(r.tau) + ',' + number(r.W) + ',' + number(r.dW_dt_measured) + ',' +
         number(r.rhs_integral) + ',' + number(r.defect());
}

namespace {

double rhs_integral(const ConformalMetric& metric, const ScalarField& u, double tau) {
  ScalarField integrand = soliton_defect_squared(metric, u, tau);
  for (std::size_t c = 0; c < u.size(); ++c) integrand[c] *= u[c];
  return 2.0 * tau * geom::integrate(metric, integrand);
}

double snapshot_W(const flow::Snapshot& s, double tau) {
  require_positive(s.u);
  ScalarField v(s.u.spec());
  for (std::size_t c = 0; c < v.size(); ++c) v[c] = std::sqrt(s.u[c]);
  return w_entropy(s.metric, v, tau);
}

}  // namespace

std::vector<EntropyRecord> entropy_monotonicity_check(const flow::FlowTrajectory& traj, double T, double tau_min) {
  if (traj.size() < 3) throw InvalidArgument("entropy check needs at least three snapshots");
  std::vector<EntropyRecord> out;
  for (std::size_t n = 1; n + 1 < traj.size(); ++n) {
    const double t = traj[n].t();
    const double tau = T - t;
    if (!(T - traj[n + 1].t() > 0.0) || below(tau, tau_min, T)) continue;
    const double before = snapshot_W(traj[n - 1], T - traj[n - 1].t());
    const double after = snapshot_W(traj[n + 1], T - traj[n + 1].t());
    EntropyRecord r;
    r.t = t;
    r.tau = tau;
    r.W = snapshot_W(traj[n], tau);
    r.dW_dt_measured = (after - before) / (traj[n + 1].t() - traj[n - 1].t());
    r.rhs_integral = rhs_integral(traj[n].metric, traj[n].u, tau);
    out.push_back(r);
  }
  return out;
}

double max_entropy_drop(const std::vector<EntropyRecord>& records) {
  double drop = 0.0;
  for (std::size_t i = 1; i < records.size(); ++i) drop = std::max(drop, records[i - 1].W - records[i].W);
  return drop;
}

namespace {

double sphere_W(const flow::SphereModel& model, double t) {
  const auto s = model.at(t);
  const double n = model.n();
  const double tau = model.blowup_time() - t;
  const double v2 = s.conjugate_density;
  return (tau * s.scalar_curvature * v2 - v2 * std::log(v2) - 0.5 * n * log_4pi(tau) * v2 - n * v2) * s.volume;
}

}  // namespace

EntropyRecord sphere_record(const flow::SphereModel& model, double t, double step) {
  const double T = model.blowup_time();
  if (!(t - step >= 0.0 && t + step < T)) throw DomainError("sphere record needs [t - step, t + step] inside [0, T*)");
  const auto s = model.at(t);
  const double n = model.n();
  EntropyRecord r;
  r.t = t;
  r.tau = T - t;
  r.W = sphere_W(model, t);
  r.dW_dt_measured = (sphere_W(model, t + step) - sphere_W(model, t - step)) / (2.0 * step);
  // Ric = (n-1)/s g(t) and Hess ln u = 0: |(n-1)/s - 1/(2τ)|² |g|² with |g|² = n.
  const double lambda = (n - 1.0) / s.scale - 0.5 / r.tau;
  r.rhs_integral = 2.0 * r.tau * lambda * lambda * n * s.conjugate_density * s.volume;
  return r;
}

std::vector<double> residual_times(const flow::FlowTrajectory& traj, double T, double tau_min) {
  std::vector<double> out;
  for (std::size_t n = 1; n + 1 < traj.size(); ++n)
    if (T - traj[n + 1].t() > 0.0 && !below(T - traj[n].t(), tau_min, T)) out.push_back(traj[n].t());
  return out;
}

ResidualLevel conjugate_identity_residual(const flow::FlowTrajectory& traj, double T, double tau_min,
                                          std::span<const double> times) {
  if (traj.size() < 3) throw InvalidArgument("conjugate identity needs at least three snapshots");
  ResidualLevel out;
  out.h = traj.spec().h();
  out.spacing = traj.spacing();
  const double slack = 1e-9 * std::max(1.0, std::abs(T));
  for (std::size_t n = 1; n + 1 < traj.size(); ++n) {
    const double tau = T - traj[n].t();
    if (!(T - traj[n + 1].t() > 0.0) || below(tau, tau_min, T)) continue;
    if (!times.empty() && std::none_of(times.begin(), times.end(),
                                       [&](double t) { return std::abs(t - traj[n].t()) <= slack; }))
      continue;
    const ConformalMetric& g = traj[n].metric;
    const ScalarField& u = traj[n].u;
    const ScalarField before = perelman_P(traj[n - 1].metric, traj[n - 1].u, T - traj[n - 1].t());
    const ScalarField after = perelman_P(traj[n + 1].metric, traj[n + 1].u, T - traj[n + 1].t());
    const ScalarField P = perelman_P(g, u, tau);
    const ScalarField lap = geom::laplace_beltrami(g, P);
    const ScalarField R = geom::scalar_curvature(g);
    const ScalarField defect = soliton_defect_squared(g, u, tau);
    const double dt = traj[n + 1].t() - traj[n - 1].t();
    for (std::size_t c = 0; c < u.size(); ++c) {
      const double lhs = (after[c] - before[c]) / dt + lap[c] - R[c] * P[c];
      const double r = std::abs(lhs - 2.0 * tau * defect[c] * u[c]);
      ++out.checked;
      if (r > out.sup_residual) {
        out.sup_residual = r;
        out.argmax_t = traj[n].t();
        out.argmax = g.spec().point(c);
      }
    }
  }
  return out;
}

std::vector<double> ResidualConvergence::ratios() const {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < levels.size(); ++i) out.push_back(levels[i].sup_residual / levels[i + 1].sup_residual);
  return out;
}

std::vector<double> ResidualConvergence::orders() const {
  std::vector<double> out;
  const std::vector<double> r = ratios();
  for (std::size_t i = 0; i < r.size(); ++i) out.push_back(std::log(r[i]) / std::log(levels[i].h / levels[i + 1].h));
  return out;
}

ResidualConvergence conjugate_convergence(const std::vector<const flow::FlowTrajectory*>& levels, double T,
                                          double tau_min) {
  if (levels.size() < 2) throw InvalidArgument("convergence needs at least two levels");
  for (const flow::FlowTrajectory* t : levels)
    if (t == nullptr) throw InvalidArgument("null trajectory");
  const std::vector<double> times = residual_times(*levels[0], T, tau_min);
  if (times.empty()) throw InvalidArgument("no coarse snapshot inside the tau window");
  ResidualConvergence rec;
  for (const flow::FlowTrajectory* t : levels) {
    rec.levels.push_back(conjugate_identity_residual(*t, T, tau_min, times));
    if (rec.levels.back().checked != times.size() * t->spec().size())
      throw InvalidArgument("refinement levels do not share the coarse snapshot times");
  }
  return rec;
}

}  // namespace rhl::entropy
