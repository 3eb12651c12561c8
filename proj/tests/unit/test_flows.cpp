#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "rhl/errors.hpp"
#include "rhl/flows.hpp"
#include "rhl/geometry.hpp"

namespace {

using namespace rhl;
using namespace rhl::flow;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

GridSpec torus(int n) { return GridSpec(n, n, kTwoPi, kTwoPi); }

double sup_error(const ScalarField& a, const std::function<double(double, double)>& exact) {
  const GridSpec& s = a.spec();
  double err = 0.0;
  for (int j = 0; j < s.ny(); ++j)
    for (int i = 0; i < s.nx(); ++i) err = std::max(err, std::abs(a(i, j) - exact(s.x(i), s.y(j))));
  return err;
}

// Flat heat flow of u0 up to time T at a step close to the CFL limit, stepped
// an exact number of times.
ScalarField flat_heat(const GridSpec& s, const ScalarField& u0, double T, int steps) {
  const ConformalMetric g = ConformalMetric::flat(s);
  ScalarField u = u0;
  for (int n = 0; n < steps; ++n) u = heat_step(g, u, T / steps);
  return u;
}

TEST(RicciStep, ZeroAndConstantAreFixedPoints) {
  const GridSpec s = torus(16);
  const double dt = cfl_limit(ConformalMetric::flat(s));
  EXPECT_EQ(ricci_step(ConformalMetric::flat(s), dt).f().max_abs(), 0.0);
  const ConformalMetric c(ScalarField(s, 0.7), 1.0);
  const ConformalMetric next = ricci_step(c, cfl_limit(c));
  EXPECT_EQ(next.f().max(), 0.7);
  EXPECT_EQ(next.f().min(), 0.7);
  EXPECT_DOUBLE_EQ(next.t(), 1.0 + cfl_limit(c));
}

TEST(RicciStep, SmallModeDecaysLikeLinearisation) {
  const GridSpec s = torus(64);
  const double eps = 0.01;
  ConformalMetric g(ScalarField::sample(s, [&](double x, double) { return eps * std::sin(x); }));
  const double dt = 0.5 * cfl_limit(g);
  const ConformalMetric one = ricci_step(g, dt);
  const double h2 = s.h() * s.h();
  // one step of f + dt(-ε sin x) up to O(ε² dt + dt² + ε dt h²)
  const double one_err = sup_error(one.f(), [&](double x, double) { return eps * std::sin(x) * (1.0 - dt); });
  EXPECT_LT(one_err, 2.0 * eps * eps * dt + dt * dt * eps + eps * dt * h2);

  const double T = 0.5;
  const int steps = static_cast<int>(std::ceil(T / dt));
  for (int n = 0; n < steps; ++n) g = ricci_step(g, T / steps);
  const double err = sup_error(g.f(), [&](double x, double) { return eps * std::exp(-T) * std::sin(x); });
  // Quadratic terms of size ε² plus the spatial truncation ε h²/12.
  EXPECT_LT(err, eps * eps + eps * h2 / 12.0);
}

TEST(RicciStep, RejectsStepAboveCfl) {
  const GridSpec s = torus(16);
  const ConformalMetric g = ConformalMetric::flat(s);
  EXPECT_THROW(ricci_step(g, 1.01 * cfl_limit(g)), CflViolation);
  EXPECT_THROW(heat_step(g, ScalarField(s), 1.01 * cfl_limit(g)), CflViolation);
  EXPECT_NO_THROW(ricci_step(g, cfl_limit(g)));
}

TEST(RicciStep, TorusAreaIsConserved) {
  const GridSpec s = torus(48);
  ConformalMetric g(ScalarField::sample(s, [](double x, double y) { return 0.3 * std::sin(x) * std::cos(y); }));
  const double a0 = g.area();
  const double dt = cfl_limit(g);
  for (int n = 0; n < 200; ++n) g = ricci_step(g, dt);
  EXPECT_LT(std::abs(g.area() - a0) / a0, 1e-10);
}

TEST(HeatStep, ConstantIsUnchanged) {
  const GridSpec s = torus(16);
  const ConformalMetric g(ScalarField::sample(s, [](double x, double y) { return 0.2 * std::cos(x + y); }));
  const ScalarField u = heat_step(g, ScalarField(s, 3.5), cfl_limit(g));
  EXPECT_EQ(u.max(), 3.5);
  EXPECT_EQ(u.min(), 3.5);
}

TEST(HeatStep, FlatSineMode) {
  const GridSpec s = torus(64);
  const ScalarField u0 = ScalarField::sample(s, [](double x, double) { return std::sin(x); });
  const double T = 0.5;
  const int steps = static_cast<int>(std::ceil(T / cfl_limit(ConformalMetric::flat(s))));
  const ScalarField u = flat_heat(s, u0, T, steps);
  const double err = sup_error(u, [&](double x, double) { return std::exp(-T) * std::sin(x); });
  EXPECT_LT(err, s.h() * s.h() / 12.0 * T);
}

TEST(HeatStep, MixedModesDecayIndependently) {
  const GridSpec s = torus(64);
  const ScalarField u0 = ScalarField::sample(s, [](double x, double y) { return std::sin(x) + std::cos(2.0 * y); });
  const double T = 0.25;
  const int steps = static_cast<int>(std::ceil(T / cfl_limit(ConformalMetric::flat(s))));
  const ScalarField u = flat_heat(s, u0, T, steps);
  const double err = sup_error(
      u, [&](double x, double y) { return std::exp(-T) * std::sin(x) + std::exp(-4.0 * T) * std::cos(2.0 * y); });
  // The cos 2y mode carries 16 h²/12 per unit time of consistency error.
  EXPECT_LT(err, 17.0 * s.h() * s.h() / 12.0 * T);
}

TEST(HeatStep, RefinementReducesErrorFourfold) {
  const double T = 0.5;
  const GridSpec coarse = torus(32);
  const GridSpec fine = coarse.refined();
  const int n_coarse = static_cast<int>(std::ceil(T / cfl_limit(ConformalMetric::flat(coarse))));
  auto mode = [](double x, double) { return std::sin(x); };
  auto exact = [&](double x, double) { return std::exp(-T) * std::sin(x); };
  const double e_coarse = sup_error(flat_heat(coarse, ScalarField::sample(coarse, mode), T, n_coarse), exact);
  const double e_fine = sup_error(flat_heat(fine, ScalarField::sample(fine, mode), T, 4 * n_coarse), exact);
  const double ratio = e_coarse / e_fine;
  EXPECT_GE(ratio, 3.4);
  EXPECT_LE(ratio, 4.6);
}

TEST(CoupledStep, MatchesSeparateStepsOnStaticMetric) {
  const GridSpec s = torus(32);
  const ConformalMetric g = ConformalMetric::flat(s);
  const ScalarField u0 = ScalarField::sample(s, [](double x, double y) { return std::cos(x) * std::sin(2 * y); });
  const double dt = cfl_limit(g);
  const Snapshot next = coupled_step(Snapshot{g, u0}, dt);
  const ScalarField u = heat_step(g, u0, dt);
  EXPECT_EQ(next.metric.f().max_abs(), 0.0);
  for (std::size_t k = 0; k < u.size(); ++k) EXPECT_DOUBLE_EQ(next.u[k], u[k]);
}

RunConfig curved_config(int n, double T) {
  const GridSpec s = torus(n);
  RunConfig c(ScalarField::sample(s, [](double x, double y) { return 0.1 * std::sin(x) * std::sin(y); }),
              ScalarField::sample(s, [](double x, double) { return 1.0 + 0.5 * std::cos(x); }));
  c.scenario = "curved";
  c.final_time = T;
  c.dt = cfl_limit(ConformalMetric(c.f0));
  c.snapshot_every = 4;
  return c;
}

TEST(RunConfig, StepsAreWholeMultiplesOfStride) {
  RunConfig c = curved_config(16, 0.1);
  c.dt = 0.003;
  c.snapshot_every = 5;
  EXPECT_EQ(c.steps(), 35);
  EXPECT_LE(c.effective_dt(), c.dt);
  c.dt = 10.0 * cfl_limit(ConformalMetric(c.f0));
  EXPECT_THROW(c.validate(), CflViolation);
  c.dt = 0.001;
  c.final_time = 0.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(RunCoupledFlow, ConstantDataStaysConstant) {
  RunConfig c = curved_config(24, 0.2);
  c.u0 = ScalarField(c.spec(), 2.0);
  const CoupledRun run = run_coupled_flow(c);
  for (const Snapshot& snap : run.trajectory.snapshots()) {
    EXPECT_NEAR(snap.u.max(), 2.0, 1e-14);
    EXPECT_NEAR(snap.u.min(), 2.0, 1e-14);
  }
}

TEST(RunCoupledFlow, FlatMetricStaysFlat) {
  RunConfig c = curved_config(24, 0.2);
  c.f0 = ScalarField(c.spec());
  const CoupledRun run = run_coupled_flow(c);
  EXPECT_EQ(run.trajectory[run.trajectory.size() - 1].metric.f().max_abs(), 0.0);
  const double T = run.trajectory.final_time();
  EXPECT_NEAR(T, 0.2, 1e-14);
  const double err = sup_error(run.trajectory[run.trajectory.size() - 1].u,
                               [&](double x, double) { return 1.0 + 0.5 * std::exp(-T) * std::cos(x); });
  EXPECT_LT(err, 0.5 * c.spec().h() * c.spec().h() / 12.0 * T);
}

TEST(RunCoupledFlow, TrajectoryLayoutAndMaximumPrinciple) {
  const RunConfig c = curved_config(32, 0.25);
  const CoupledRun run = run_coupled_flow(c);
  const FlowTrajectory& traj = run.trajectory;
  EXPECT_EQ(traj.stride(), 4);
  EXPECT_EQ(static_cast<int>(traj.size()), c.steps() / 4 + 1);
  EXPECT_DOUBLE_EQ(traj.start_time(), 0.0);
  EXPECT_NEAR(traj.final_time(), 0.25, 1e-14);
  EXPECT_TRUE(run.max_principle.ok());
  for (const Snapshot& snap : traj.snapshots()) {
    EXPECT_LE(snap.u.max(), 1.5 + 1e-12);
    EXPECT_GE(snap.u.min(), 0.5 - 1e-12);
  }
}

TEST(RunCoupledFlow, MetricInterpolationHitsSnapshots) {
  const CoupledRun run = run_coupled_flow(curved_config(16, 0.5));
  ASSERT_GE(run.trajectory.size(), 3u);
  const FlowTrajectory& traj = run.trajectory;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const ConformalMetric m = traj.metric_at(traj[k].t());
    for (std::size_t c = 0; c < m.f().size(); ++c) EXPECT_EQ(m.f()[c], traj[k].metric.f()[c]);
  }
  const double mid = 0.5 * (traj[1].t() + traj[2].t());
  const ConformalMetric m = traj.metric_at(mid);
  EXPECT_NEAR(m.f()[5], 0.5 * (traj[1].metric.f()[5] + traj[2].metric.f()[5]), 1e-15);
  EXPECT_THROW(traj.metric_at(2.0), InvalidArgument);
}

TEST(FlowTrajectory, RejectsMixedGridsAndUnevenTimes) {
  const GridSpec a = torus(16);
  const GridSpec b = torus(32);
  std::vector<Snapshot> mixed{{ConformalMetric::flat(a, 0.0), ScalarField(a)},
                              {ConformalMetric::flat(b, 0.1), ScalarField(b)}};
  EXPECT_THROW(FlowTrajectory(mixed, 0.1), InvalidArgument);
  std::vector<Snapshot> uneven{{ConformalMetric::flat(a, 0.0), ScalarField(a)},
                               {ConformalMetric::flat(a, 0.1), ScalarField(a)},
                               {ConformalMetric::flat(a, 0.3), ScalarField(a)}};
  EXPECT_THROW(FlowTrajectory(uneven, 0.1), InvalidArgument);
}

TEST(FlowAborted, BlowupKeepsGoodSnapshots) {
  const GridSpec s = torus(16);
  RunConfig c(ScalarField(s), ScalarField(s, 1.0));
  c.u0[3] = 1e308;
  c.final_time = 1.0;
  c.dt = cfl_limit(ConformalMetric(c.f0));
  c.snapshot_every = 2;
  try {
    run_coupled_flow(c);
    FAIL() << "expected abort";
  } catch (const FlowAborted& e) {
    EXPECT_GE(e.partial().size(), 1u);
    EXPECT_TRUE(e.partial()[0].u.all_finite());
  }
}

TEST(ConjugateHeat, ConstantOnFlatStaticMetric) {
  RunConfig c = curved_config(16, 0.2);
  c.f0 = ScalarField(c.spec());
  const CoupledRun run = run_coupled_flow(c);
  const FlowTrajectory conj = conjugate_heat_solve(run.trajectory, ScalarField(c.spec(), 1.25));
  ASSERT_EQ(conj.size(), run.trajectory.size());
  for (const Snapshot& snap : conj.snapshots()) {
    EXPECT_NEAR(snap.u.max(), 1.25, 1e-14);
    EXPECT_NEAR(snap.u.min(), 1.25, 1e-14);
  }
}

TEST(ConjugateHeat, MassIsConservedOnCurvedFlow) {
  const CoupledRun run = run_coupled_flow(curved_config(32, 0.25));
  const GridSpec& s = run.trajectory.spec();
  const ScalarField uT = ScalarField::sample(s, [](double x, double y) {
    const double dx = x - std::numbers::pi;
    const double dy = y - std::numbers::pi;
    return std::exp(-(dx * dx + dy * dy));
  });
  const FlowTrajectory conj = conjugate_heat_solve(run.trajectory, uT);
  const double m_end = geom::integrate(conj[conj.size() - 1].metric, uT);
  for (const Snapshot& snap : conj.snapshots()) {
    EXPECT_LT(std::abs(geom::integrate(snap.metric, snap.u) - m_end) / m_end, 1e-6) << "t = " << snap.t();
  }
  for (std::size_t k = 0; k < conj.size(); ++k) EXPECT_EQ(conj[k].t(), run.trajectory[k].t());
}

TEST(ConjugateHeat, RejectsMismatchedGrid) {
  const CoupledRun run = run_coupled_flow(curved_config(16, 0.05));
  EXPECT_THROW(conjugate_heat_solve(run.trajectory, ScalarField(torus(32))), InvalidArgument);
}

TEST(SphereModel, UnitSphereAtTimeZero) {
  const SphereModel m(2);
  const auto s = m.at(0.0);
  EXPECT_DOUBLE_EQ(s.scale, 1.0);
  EXPECT_DOUBLE_EQ(s.scalar_curvature, 2.0);
  EXPECT_DOUBLE_EQ(s.first_eigenvalue, 2.0);
  EXPECT_DOUBLE_EQ(s.volume, 4.0 * std::numbers::pi);
  EXPECT_DOUBLE_EQ(m.blowup_time(), 0.5);
  EXPECT_THROW(m.at(0.5), DomainError);
  EXPECT_THROW(m.at(-0.1), DomainError);
  EXPECT_THROW(SphereModel(1), InvalidArgument);
}

TEST(SphereModel, HeatModeSolvesHeatEquation) {
  // u = A(t) cos θ with Δ_{g(t)} cos θ = -(2 / scale) cos θ on S².
  const SphereModel m(2);
  for (double t : {0.0, 0.1, 0.3, 0.45}) {
    EXPECT_NEAR(m.at(t).heat_amplitude, 1.0 - 2.0 * t, 1e-15);
    const double dA = -2.0;
    EXPECT_NEAR(dA, -m.at(t).first_eigenvalue * m.at(t).heat_amplitude, 1e-14);
  }
  // Higher n: A' = -λ₁ A, checked by centered differences.
  for (int n : {3, 4, 7}) {
    const SphereModel mn(n);
    const double t = 0.3 * mn.blowup_time();
    const double h = 1e-5;
    const double d = (mn.at(t + h).heat_amplitude - mn.at(t - h).heat_amplitude) / (2 * h);
    EXPECT_NEAR(d / (-mn.at(t).first_eigenvalue * mn.at(t).heat_amplitude), 1.0, 1e-7);
  }
}

TEST(SphereModel, ConjugateConstantKeepsMass) {
  for (int n : {2, 3, 5}) {
    const SphereModel m(n);
    for (double frac : {0.0, 0.2, 0.6, 0.9}) {
      const auto s = m.at(frac * m.blowup_time());
      EXPECT_NEAR(s.conjugate_density * s.volume, 1.0, 1e-14);
    }
  }
  // n = 2: u = C / (1 - 2t), vol = 4π(1 - 2t).
  const SphereModel m(2);
  EXPECT_NEAR(m.at(0.2).conjugate_density, 1.0 / (4.0 * std::numbers::pi * 0.6), 1e-15);
  EXPECT_NEAR(m.at(0.2).volume, 4.0 * std::numbers::pi * 0.6, 1e-13);
}

TEST(SphereModel, VolumeAndDistanceScale) {
  const SphereModel m3(3);
  EXPECT_NEAR(m3.unit_volume(), 2.0 * std::numbers::pi * std::numbers::pi, 1e-13);
  EXPECT_NEAR(m3.at(0.1).volume, m3.unit_volume() * std::pow(0.6, 1.5), 1e-13);
  EXPECT_NEAR(m3.at(0.1).scalar_curvature, 6.0 / 0.6, 1e-13);
  const SphereModel m(2);
  EXPECT_NEAR(m.distance(1.0, 0.375), 0.5, 1e-15);
}

TEST(TrajectoryFile, RoundTripIsBitExact) {
  const CoupledRun run = run_coupled_flow(curved_config(16, 0.05));
  const auto path = std::filesystem::temp_directory_path() / "rhl_traj_roundtrip.bin";
  write_trajectory(path, run.trajectory, "scenario = \"curved\"\n");
  const StoredTrajectory back = read_trajectory(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.config_echo, "scenario = \"curved\"\n");
  ASSERT_EQ(back.trajectory.size(), run.trajectory.size());
  EXPECT_EQ(back.trajectory.step_dt(), run.trajectory.step_dt());
  EXPECT_EQ(back.trajectory.spec(), run.trajectory.spec());
  for (std::size_t k = 0; k < back.trajectory.size(); ++k) {
    EXPECT_EQ(back.trajectory[k].t(), run.trajectory[k].t());
    for (std::size_t c = 0; c < back.trajectory.spec().size(); ++c) {
      EXPECT_EQ(back.trajectory[k].metric.f()[c], run.trajectory[k].metric.f()[c]);
      EXPECT_EQ(back.trajectory[k].u[c], run.trajectory[k].u[c]);
    }
  }
}

TEST(TrajectoryFile, RejectsForeignFile) {
  const auto path = std::filesystem::temp_directory_path() / "rhl_not_a_traj.bin";
  {
    std::ofstream os(path);
    os << "hello world, not a trajectory";
  }
  EXPECT_THROW(read_trajectory(path), Error);
  std::filesystem::remove(path);
}

}  // namespace
