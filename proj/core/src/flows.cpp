#include "rhl/flows.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>

#include "rhl/geometry.hpp"

namespace rhl::flow {
namespace {

constexpr double kCflSlack = 1e-12;

void check_cfl(const ConformalMetric& metric, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
  const double limit = cfl_limit(metric);
  if (dt > limit * (1.0 + kCflSlack)) throw CflViolation(dt, limit);
}

// ∂_t f = e^{-2f} Δ₀ f
ScalarField ricci_rate(const ScalarField& f) {
  ScalarField lap = geom::flat_laplacian(f);
  for (std::size_t k = 0; k < lap.size(); ++k) lap[k] *= std::exp(-2.0 * f[k]);
  return lap;
}

// ∂_t u = e^{-2f} Δ₀ u
ScalarField heat_rate(const ScalarField& f, const ScalarField& u) {
  ScalarField lap = geom::flat_laplacian(u);
  for (std::size_t k = 0; k < lap.size(); ++k) lap[k] *= std::exp(-2.0 * f[k]);
  return lap;
}

// ∂_s u = e^{-2f} Δ₀ u - R u with R = -2 e^{-2f} Δ₀ f
ScalarField conjugate_rate(const ScalarField& f, const ScalarField& u) {
  const ScalarField lap_u = geom::flat_laplacian(u);
  const ScalarField lap_f = geom::flat_laplacian(f);
  ScalarField out(u.spec());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double w = std::exp(-2.0 * f[k]);
    out[k] = w * lap_u[k] + 2.0 * w * lap_f[k] * u[k];
  }
  return out;
}

ScalarField axpy(const ScalarField& x, double a, const ScalarField& y) {
  ScalarField out = x;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += a * y[k];
  return out;
}

ScalarField rk4_combine(const ScalarField& x, double dt, const ScalarField& k1, const ScalarField& k2,
                        const ScalarField& k3, const ScalarField& k4) {
  ScalarField out = x;
  const double w = dt / 6.0;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += w * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
  return out;
}

bool finite(const Snapshot& s) { return s.metric.f().all_finite() && s.u.all_finite(); }

}  // namespace

double cfl_limit(const ConformalMetric& metric) {
  const double h = metric.spec().h();
  return kCflFactor * h * h * metric.min_area_density();
}

ConformalMetric ricci_step(const ConformalMetric& metric, double dt) {
  check_cfl(metric, dt);
  const ScalarField& f = metric.f();
  const ScalarField k1 = ricci_rate(f);
  const ScalarField k2 = ricci_rate(axpy(f, 0.5 * dt, k1));
  const ScalarField k3 = ricci_rate(axpy(f, 0.5 * dt, k2));
  const ScalarField k4 = ricci_rate(axpy(f, dt, k3));
  return ConformalMetric(rk4_combine(f, dt, k1, k2, k3, k4), metric.t() + dt);
}

ScalarField heat_step(const ConformalMetric& metric, const ScalarField& u, double dt) {
  check_cfl(metric, dt);
  if (!(u.spec() == metric.spec())) throw InvalidArgument("u is not aligned to the metric grid");
  const ScalarField& f = metric.f();
  const ScalarField k1 = heat_rate(f, u);
  const ScalarField k2 = heat_rate(f, axpy(u, 0.5 * dt, k1));
  const ScalarField k3 = heat_rate(f, axpy(u, 0.5 * dt, k2));
  const ScalarField k4 = heat_rate(f, axpy(u, dt, k3));
  return rk4_combine(u, dt, k1, k2, k3, k4);
}

Snapshot coupled_step(const Snapshot& state, double dt) {
  check_cfl(state.metric, dt);
  const ScalarField& f = state.metric.f();
  const ScalarField& u = state.u;
  if (!(u.spec() == f.spec())) throw InvalidArgument("u is not aligned to the metric grid");

  const ScalarField k1f = ricci_rate(f);
  const ScalarField k1u = heat_rate(f, u);
  const ScalarField f2 = axpy(f, 0.5 * dt, k1f);
  const ScalarField k2f = ricci_rate(f2);
  const ScalarField k2u = heat_rate(f2, axpy(u, 0.5 * dt, k1u));
  const ScalarField f3 = axpy(f, 0.5 * dt, k2f);
  const ScalarField k3f = ricci_rate(f3);
  const ScalarField k3u = heat_rate(f3, axpy(u, 0.5 * dt, k2u));
  const ScalarField f4 = axpy(f, dt, k3f);
  const ScalarField k4f = ricci_rate(f4);
  const ScalarField k4u = heat_rate(f4, axpy(u, dt, k3u));

  return Snapshot{ConformalMetric(rk4_combine(f, dt, k1f, k2f, k3f, k4f), state.t() + dt),
                  rk4_combine(u, dt, k1u, k2u, k3u, k4u)};
}

FlowTrajectory::FlowTrajectory(std::vector<Snapshot> snapshots, double step_dt)
    : snapshots_(std::move(snapshots)), step_dt_(step_dt) {
  if (snapshots_.empty()) throw InvalidArgument("trajectory needs at least one snapshot");
  if (!(step_dt_ > 0.0)) throw InvalidArgument("trajectory step must be positive");
  const GridSpec& s = snapshots_.front().metric.spec();
  for (const Snapshot& snap : snapshots_) {
    if (!(snap.metric.spec() == s) || !(snap.u.spec() == s)) {
      throw InvalidArgument("trajectory snapshots must share one grid");
    }
    if (!snap.u.all_finite()) throw InvalidArgument("trajectory holds a non-finite u");
  }
  if (snapshots_.size() > 1) {
    const double gap = snapshots_[1].t() - snapshots_[0].t();
    if (!(gap > 0.0)) throw InvalidArgument("snapshot times must increase");
    for (std::size_t k = 1; k < snapshots_.size(); ++k) {
      const double g = snapshots_[k].t() - snapshots_[k - 1].t();
      if (std::abs(g - gap) > 1e-9 * gap) throw InvalidArgument("snapshot spacing must be uniform");
    }
    const double ratio = gap / step_dt_;
    if (std::abs(ratio - std::round(ratio)) > 1e-6 || std::round(ratio) < 1.0) {
      throw InvalidArgument("snapshot spacing must be a whole number of steps");
    }
  }
}

double FlowTrajectory::spacing() const {
  if (snapshots_.size() < 2) return 0.0;
  return (final_time() - start_time()) / static_cast<double>(snapshots_.size() - 1);
}

int FlowTrajectory::stride() const {
  if (snapshots_.size() < 2) return 1;
  return static_cast<int>(std::lround(spacing() / step_dt_));
}

ConformalMetric FlowTrajectory::metric_at(double t) const {
  if (snapshots_.size() == 1) return ConformalMetric(snapshots_.front().metric.f(), t);
  const double span = final_time() - start_time();
  if (t < start_time() - 1e-12 * span || t > final_time() + 1e-12 * span) {
    throw InvalidArgument("time outside trajectory");
  }
  const double pos = (t - start_time()) / spacing();
  const auto last = static_cast<double>(snapshots_.size() - 2);
  const double cell = std::clamp(std::floor(pos), 0.0, last);
  const auto k = static_cast<std::size_t>(cell);
  double w = std::clamp(pos - cell, 0.0, 1.0);
  if (w < 1e-9) w = 0.0;
  if (w > 1.0 - 1e-9) w = 1.0;
  const ScalarField& a = snapshots_[k].metric.f();
  const ScalarField& b = snapshots_[k + 1].metric.f();
  if (w == 0.0) return ConformalMetric(a, t);
  if (w == 1.0) return ConformalMetric(b, t);
  ScalarField f(a.spec());
  for (std::size_t c = 0; c < f.size(); ++c) f[c] = (1.0 - w) * a[c] + w * b[c];
  return ConformalMetric(std::move(f), t);
}

int RunConfig::steps() const {
  if (!(dt > 0.0) || !(final_time > 0.0)) throw InvalidArgument("dt and final time must be positive");
  if (snapshot_every < 1) throw InvalidArgument("snapshot_every must be at least 1");
  const double raw = std::ceil(final_time / dt * (1.0 - 1e-12));
  const int n = std::max(1, static_cast<int>(raw));
  return ((n + snapshot_every - 1) / snapshot_every) * snapshot_every;
}

void RunConfig::validate() const {
  if (!(u0.spec() == f0.spec())) throw InvalidArgument("initial u and f use different grids");
  if (!f0.all_finite() || !u0.all_finite()) throw InvalidArgument("initial data must be finite");
  if (!(final_time > 0.0)) throw InvalidArgument("final time must be positive");
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (snapshot_every < 1) throw InvalidArgument("snapshot_every must be at least 1");
  const ConformalMetric m0(f0);
  const double limit = cfl_limit(m0);
  if (dt > limit * (1.0 + kCflSlack)) throw CflViolation(dt, limit);
}

CoupledRun run_coupled_flow(const RunConfig& config) {
  config.validate();
  const int steps = config.steps();
  const double dt = config.effective_dt();

  Snapshot state{ConformalMetric(config.f0, 0.0), config.u0};
  std::vector<Snapshot> snapshots;
  snapshots.reserve(static_cast<std::size_t>(steps / config.snapshot_every) + 1);
  snapshots.push_back(state);

  MaxPrincipleLog log;
  for (int n = 1; n <= steps; ++n) {
    const double lap_sup = geom::laplace_beltrami(state.metric, state.u).max_abs();
    const double umax = state.u.max();
    const double umin = state.u.min();
    Snapshot next = coupled_step(state, dt);
    if (!finite(next)) {
      throw FlowAborted("non-finite value at t = " + std::to_string(next.t()) + " in scenario " + config.scenario +
                            "; last good snapshot at t = " + std::to_string(state.t()),
                        FlowTrajectory(std::move(snapshots), dt));
    }
    log.tolerance = std::max(log.tolerance, 10.0 * dt * lap_sup);
    log.max_increase = std::max(log.max_increase, next.u.max() - umax);
    log.min_decrease = std::max(log.min_decrease, umin - next.u.min());
    state = std::move(next);
    if (n % config.snapshot_every == 0) {
      // Pin the stamp to the grid of snapshot times to avoid drift from repeated addition.
      state.metric = ConformalMetric(state.metric.f(), n * dt);
      snapshots.push_back(state);
    }
  }
  return CoupledRun{FlowTrajectory(std::move(snapshots), dt), log};
}

FlowTrajectory conjugate_heat_solve(const FlowTrajectory& trajectory, const ScalarField& uT) {
  if (!(uT.spec() == trajectory.spec())) throw InvalidArgument("terminal data grid does not match trajectory");
  if (trajectory.size() < 2) throw InvalidArgument("conjugate solve needs at least two snapshots");

  const int stride = trajectory.stride();
  const double h = trajectory.spacing() / stride;
  const double t_end = trajectory.final_time();

  std::vector<Snapshot> out(trajectory.size(), trajectory[0]);
  std::size_t slot = trajectory.size() - 1;
  out[slot] = Snapshot{trajectory[slot].metric, uT};

  ScalarField u = uT;
  const int steps = static_cast<int>(trajectory.size() - 1) * stride;
  for (int n = 0; n < steps; ++n) {
    const double t0 = t_end - n * h;
    const ConformalMetric m0 = trajectory.metric_at(t0);
    check_cfl(m0, h);
    const ScalarField fmid = trajectory.metric_at(std::max(t0 - 0.5 * h, trajectory.start_time())).f();
    const ScalarField f1 = trajectory.metric_at(std::max(t0 - h, trajectory.start_time())).f();

    const ScalarField k1 = conjugate_rate(m0.f(), u);
    const ScalarField k2 = conjugate_rate(fmid, axpy(u, 0.5 * h, k1));
    const ScalarField k3 = conjugate_rate(fmid, axpy(u, 0.5 * h, k2));
    const ScalarField k4 = conjugate_rate(f1, axpy(u, h, k3));
    u = rk4_combine(u, h, k1, k2, k3, k4);
    if (!u.all_finite()) throw Error("conjugate heat solve produced a non-finite value");

    if ((n + 1) % stride == 0) {
      --slot;
      out[slot] = Snapshot{trajectory[slot].metric, u};
    }
  }
  return FlowTrajectory(std::move(out), trajectory.step_dt());
}

SphereModel::SphereModel(int n) : n_(n) {
  if (n < 2) throw InvalidArgument("sphere dimension must be at least 2");
}

double SphereModel::unit_volume() const {
  // |S^n| = 2 π^{(n+1)/2} / Γ((n+1)/2)
  const double half = 0.5 * (n_ + 1);
  return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

double SphereModel::scale(double t) const {
  if (!(t >= 0.0) || !(t < blowup_time())) {
    throw DomainError("sphere model evaluated outside [0, T*)");
  }
  return 1.0 - 2.0 * (n_ - 1) * t;
}

SphereModel::State SphereModel::at(double t) const {
  const double s = scale(t);
  const double n = n_;
  State out{};
  out.scale = s;
  out.scalar_curvature = n * (n - 1.0) / s;
  out.first_eigenvalue = n / s;
  out.volume = unit_volume() * std::pow(s, 0.5 * n);
  // exp(-∫₀ᵗ n / (1 - 2(n-1)σ) dσ) = s^{n / (2(n-1))}
  out.heat_amplitude = std::pow(s, n / (2.0 * (n - 1.0)));
  out.conjugate_density = 1.0 / out.volume;
  return out;
}

double SphereModel::distance(double theta, double t) const { return std::sqrt(scale(t)) * theta; }

namespace {

constexpr char kMagic[8] = {'R', 'H', 'L', 'T', 'R', 'A', 'J', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  is.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!is) throw Error("truncated trajectory file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_trajectory(const std::filesystem::path& path, const FlowTrajectory& trajectory,
                      const std::string& config_echo) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  const GridSpec& s = trajectory.spec();
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kVersion);
  put<std::int32_t>(os, s.nx());
  put<std::int32_t>(os, s.ny());
  put<double>(os, s.lx());
  put<double>(os, s.ly());
  put<double>(os, trajectory.step_dt());
  put<std::int32_t>(os, static_cast<std::int32_t>(trajectory.size()));
  put<std::uint64_t>(os, config_echo.size());
  os.write(config_echo.data(), static_cast<std::streamsize>(config_echo.size()));
  for (const Snapshot& snap : trajectory.snapshots()) {
    put<double>(os, snap.t());
    for (double v : snap.metric.f().values()) put<double>(os, v);
    for (double v : snap.u.values()) put<double>(os, v);
  }
  if (!os) throw Error("failed writing " + path.string());
}

StoredTrajectory read_trajectory(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || !std::equal(magic, magic + 8, kMagic)) throw Error(path.string() + " is not a trajectory file");
  if (get<std::uint32_t>(is) != kVersion) throw Error("unsupported trajectory version");
  const int nx = get<std::int32_t>(is);
  const int ny = get<std::int32_t>(is);
  const double lx = get<double>(is);
  const double ly = get<double>(is);
  const double dt = get<double>(is);
  const int count = get<std::int32_t>(is);
  const auto echo_len = get<std::uint64_t>(is);
  std::string echo(echo_len, '\0');
  is.read(echo.data(), static_cast<std::streamsize>(echo_len));
  if (count < 1) throw Error("trajectory file has no snapshots");

  const GridSpec spec(nx, ny, lx, ly);
  std::vector<Snapshot> snaps;
  snaps.reserve(static_cast<std::size_t>(count));
  for (int c = 0; c < count; ++c) {
    const double t = get<double>(is);
    ScalarField f(spec);
    ScalarField u(spec);
    for (double& v : f.values()) v = get<double>(is);
    for (double& v : u.values()) v = get<double>(is);
    snaps.push_back(Snapshot{ConformalMetric(std::move(f), t), std::move(u)});
  }
  return StoredTrajectory{FlowTrajectory(std::move(snaps), dt), std::move(echo)};
}

}  // namespace rhl::flow
