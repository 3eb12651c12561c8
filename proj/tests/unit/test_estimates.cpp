#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>

#include "rhl/constants.hpp"
#include "rhl/errors.hpp"
#include "rhl/estimates.hpp"
#include "rhl/flows.hpp"
#include "rhl/geometry.hpp"

namespace {

using namespace rhl;
using estimate::ParabolicBall;

constexpr double kTwoPi = 2.0 * std::numbers::pi;
using Fn = std::function<double(double, double)>;

flow::FlowTrajectory evolve(int n, const Fn& f0, const Fn& u0, double T, int stride) {
  const GridSpec s(n, n, kTwoPi, kTwoPi);
  flow::RunConfig c(ScalarField::sample(s, f0), ScalarField::sample(s, u0));
  c.final_time = T;
  c.dt = flow::cfl_limit(ConformalMetric(c.f0));
  c.snapshot_every = stride;
  return flow::run_coupled_flow(c).trajectory;
}

double zero(double, double) { return 0.0; }

// Independent scan: flat metric, |∇u| from its own centered differences.
double scan_gradient_ratio(const flow::FlowTrajectory& traj, const ParabolicBall& ball, double a) {
  const GridSpec& s = traj.spec();
  double best = 0.0;
  for (std::size_t n = 0; n < ball.size(); ++n) {
    const double t = traj[n].t();
    if (t <= 0.0) continue;
    const ScalarField& u = traj[n].u;
    const ScalarField& f = traj[n].metric.f();
    const Mask m = ball.sub_mask(n, ball.r() / 2);
    for (int j = 0; j < s.ny(); ++j)
      for (int i = 0; i < s.nx(); ++i) {
        if (!m[s.index(i, j)]) continue;
        const double ux = (u(i + 1, j) - u(i - 1, j)) / (2 * s.hx());
        const double uy = (u(i, j + 1) - u(i, j - 1)) / (2 * s.hy());
        const double g = std::exp(-f(i, j)) * std::sqrt(ux * ux + uy * uy);
        best = std::max(best, g / (a * (1 / ball.r() + 1 / std::sqrt(t))));
      }
  }
  return best;
}

// Closed-form scan: exact |∂^k (e^{-t} sin x)| at the nodes of the same region.
double closed_form_ratio(const flow::FlowTrajectory& traj, const ParabolicBall& ball, int k) {
  const GridSpec& s = traj.spec();
  double best = 0.0;
  for (std::size_t n = 0; n < ball.size(); ++n) {
    const double t = traj[n].t();
    if (t <= 0.0) continue;
    const Mask m = ball.sub_mask(n, ball.r() / std::ldexp(1.0, k));
    for (std::size_t c = 0; c < m.size(); ++c) {
      if (!m[c]) continue;
      const double x = s.x(s.point(c).i);
      const double v = std::exp(-t) * std::abs(k % 2 ? std::cos(x) : std::sin(x));
      best = std::max(best, v / (std::pow(ball.r(), -k) + std::pow(t, -0.5 * k)));
    }
  }
  return best;
}

class FlatMode : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    traj_ = new flow::FlowTrajectory(evolve(64, zero, [](double x, double) { return std::sin(x); }, 1.0, 40));
    ball_ = new ParabolicBall(estimate::parabolic_ball(*traj_, {32, 32}, 1.0, 1.0));
  }
  static void TearDownTestSuite() {
    delete ball_;
    delete traj_;
  }
  static flow::FlowTrajectory* traj_;
  static ParabolicBall* ball_;
};
flow::FlowTrajectory* FlatMode::traj_ = nullptr;
ParabolicBall* FlatMode::ball_ = nullptr;

TEST_F(FlatMode, StaticBallMasksAgree) {
  ASSERT_GT(ball_->size(), 3u);
  for (std::size_t n = 1; n < ball_->size(); ++n) EXPECT_EQ(ball_->mask(n), ball_->mask(0));
  EXPECT_FALSE(ball_->wraps());
  EXPECT_NEAR(ball_->loop_length().front(), kTwoPi, 1e-12);
  EXPECT_EQ(ball_->mask(0)[traj_->spec().index(32, 32)], 1);
}

TEST_F(FlatMode, GradientMatchesBruteForceScans) {
  const estimate::EstimateReport rep = estimate::check_gradient(*traj_, *ball_, 1.0, 1.0);
  EXPECT_NEAR(rep.sup_ratio, scan_gradient_ratio(*traj_, *ball_, 1.0), 1e-12 * rep.sup_ratio);
  const double h = traj_->spec().h();
  EXPECT_NEAR(rep.sup_ratio, closed_form_ratio(*traj_, *ball_, 1), h * h * rep.sup_ratio);
  EXPECT_EQ(rep.flags, 0u);
  EXPECT_GT(rep.t_min, 0.0);
  EXPECT_EQ(rep.t_min, (*traj_)[1].t());
  EXPECT_GT(rep.points, 0u);
}

TEST_F(FlatMode, GradientPassesWithLedgerConstant) {
  const constants::ConstantLedger ledger;
  const estimate::EstimateReport rep = estimate::check_gradient(*traj_, *ball_, 1.0, ledger.C(1));
  EXPECT_TRUE(rep.pass());
  EXPECT_LT(rep.normalized(), 1.0);
}

TEST_F(FlatMode, HessianAndThirdOrderMatchClosedForms) {
  const double h = traj_->spec().h();
  const estimate::EstimateReport h2 = estimate::check_hessian(*traj_, *ball_, 1.0, 1.0);
  EXPECT_EQ(h2.id, "hessian");
  EXPECT_NEAR(h2.sup_ratio, closed_form_ratio(*traj_, *ball_, 2), 2 * h * h * h2.sup_ratio);
  const estimate::EstimateReport h3 = estimate::check_higher(*traj_, *ball_, 1.0, 3, 1.0);
  EXPECT_NEAR(h3.sup_ratio, closed_form_ratio(*traj_, *ball_, 3), 3 * h * h * h3.sup_ratio);
  EXPECT_THROW(estimate::check_higher(*traj_, *ball_, 1.0, 4, 1.0), UnsupportedRank);
}

TEST_F(FlatMode, EmpiricalConstantIsTheSupRatio) {
  EXPECT_EQ(estimate::empirical_constant(*traj_, *ball_, 1.0, 1),
            estimate::check_gradient(*traj_, *ball_, 1.0, 5.0).sup_ratio);
  EXPECT_EQ(estimate::empirical_constant(*traj_, *ball_, 1.0, 3),
            estimate::check_higher(*traj_, *ball_, 1.0, 3, 5.0).sup_ratio);
}

TEST_F(FlatMode, TimeUniformVariantIncludesTheInitialSlice) {
  const estimate::EstimateReport rep = estimate::check_time_uniform(*traj_, *ball_, 1.0, 1, 1.0);
  EXPECT_EQ(rep.flags, 0u);
  EXPECT_EQ(rep.t_min, 0.0);
  // At t = 0 the centered difference of sin x at x = π is -sin(h)/h.
  const double h = traj_->spec().hx();
  EXPECT_NEAR(rep.sup_ratio, std::sin(h) / h, 1e-14);
  EXPECT_EQ(rep.argmax_t, 0.0);
  const ParabolicBall wide = estimate::parabolic_ball(*traj_, {32, 32}, 2.0, 1.0);
  EXPECT_TRUE(estimate::check_time_uniform(*traj_, wide, 1.0, 1, 1.0).flags & estimate::kInitialSlice);
  EXPECT_EQ(estimate::check_time_uniform(*traj_, *ball_, 1.0, 2, 1.0).flags, 0u);
}

TEST(Estimates, ConstantDataGivesZero) {
  const auto traj = evolve(32, zero, [](double, double) { return 0.7; }, 0.2, 10);
  const ParabolicBall ball = estimate::parabolic_ball(traj, {5, 5}, 1.0, 0.2);
  EXPECT_EQ(estimate::check_gradient(traj, ball, 1.0, 1e-9).sup_ratio, 0.0);
  EXPECT_TRUE(estimate::check_gradient(traj, ball, 1.0, 1e-9).pass());
  EXPECT_EQ(estimate::check_hessian(traj, ball, 1.0, 1e-9).sup_ratio, 0.0);
  EXPECT_EQ(estimate::check_higher(traj, ball, 1.0, 3, 1e-9).sup_ratio, 0.0);
  EXPECT_EQ(estimate::empirical_constant(traj, ball, 1.0, 2), 0.0);
  EXPECT_EQ(estimate::check_shi_curvature(traj, ball, 1, 1.0).sup_ratio, 0.0);
}

TEST(Estimates, ShiCurvatureRatioOnSmallRicciFlow) {
  auto f0 = [](double x, double y) { return 0.05 * std::sin(x) * std::sin(y); };
  const auto traj = evolve(32, f0, zero, 0.2, 8);
  const ParabolicBall ball = estimate::parabolic_ball(traj, {8, 8}, 1.0, 0.2);
  const estimate::EstimateReport rep = estimate::check_shi_curvature(traj, ball, 1, 1.0);
  EXPECT_EQ(rep.flags, 0u);
  EXPECT_TRUE(std::isfinite(rep.sup_ratio));
  EXPECT_GT(rep.sup_ratio, 0.0);
  double best = 0.0;
  for (std::size_t n = 1; n < ball.size(); ++n) {
    const double t = traj[n].t();
    const ScalarField norm = geom::curvature_derivative_norm(traj[n].metric, 1);
    const Mask m = ball.sub_mask(n, 0.5);
    for (std::size_t c = 0; c < m.size(); ++c)
      if (m[c]) best = std::max(best, norm[c] / (1.0 + 1.0 / std::sqrt(t)));
  }
  EXPECT_NEAR(rep.sup_ratio, best, 1e-12 * best);
  EXPECT_THROW(estimate::check_shi_curvature(traj, ball, 3, 1.0), UnsupportedRank);
}

TEST(Estimates, ScalingSolutionAndBoundTogetherIsExact) {
  auto u0 = [](double x, double y) { return std::sin(x) * std::cos(y) + 0.3 * std::cos(2 * x); };
  auto f0 = [](double x, double y) { return 0.05 * std::sin(x) * std::sin(y); };
  const auto one = evolve(32, f0, u0, 0.2, 8);
  const auto two = evolve(32, f0, [&](double x, double y) { return 2.0 * u0(x, y); }, 0.2, 8);
  const ParabolicBall b1 = estimate::parabolic_ball(one, {16, 16}, 1.0, 0.2);
  const ParabolicBall b2 = estimate::parabolic_ball(two, {16, 16}, 1.0, 0.2);
  for (int k = 1; k <= 3; ++k) EXPECT_EQ(estimate::empirical_constant(one, b1, 1.3, k), estimate::empirical_constant(two, b2, 2.6, k));
}

TEST(Estimates, CurvatureAndWrapFlags) {
  auto f0 = [](double x, double y) { return 0.5 * std::sin(x) * std::sin(y); };
  const auto traj = evolve(32, f0, [](double x, double) { return std::sin(x); }, 0.05, 4);
  const ParabolicBall big = estimate::parabolic_ball(traj, {8, 8}, 2.5, 0.05);
  const estimate::EstimateReport rep = estimate::check_hessian(traj, big, 1.0, 1.0);
  EXPECT_TRUE(rep.flags & estimate::kCurvature);
  EXPECT_GT(rep.points, 0u);
  const ParabolicBall small = estimate::parabolic_ball(traj, {8, 8}, 0.5, 0.05);
  EXPECT_FALSE(estimate::check_hessian(traj, small, 1.0, 1.0).flags & estimate::kCurvature);

  const auto flat = evolve(32, zero, [](double x, double) { return std::sin(x); }, 0.05, 4);
  const ParabolicBall wide = estimate::parabolic_ball(flat, {0, 0}, 4.0, 0.05);
  EXPECT_TRUE(wide.wraps());
  EXPECT_TRUE(estimate::check_gradient(flat, wide, 1.0, 1.0).flags & estimate::kWraps);
  EXPECT_TRUE(estimate::check_gradient(flat, wide, 0.5, 1.0).flags & estimate::kBound);
  EXPECT_EQ(estimate::flag_names(estimate::kWraps | estimate::kBound), "bound|wraps");
  EXPECT_EQ(estimate::flag_names(0), "none");
}

TEST(Estimates, BallArgumentsAreValidated) {
  const auto flat = evolve(16, zero, zero, 0.05, 4);
  EXPECT_THROW(estimate::parabolic_ball(flat, {0, 0}, 0.0, 0.05), InvalidArgument);
  EXPECT_THROW(estimate::parabolic_ball(flat, {0, 0}, 1.0, 1.0), InvalidArgument);
  const ParabolicBall ball = estimate::parabolic_ball(flat, {0, 0}, 1.0, 0.05);
  EXPECT_THROW(estimate::check_gradient(flat, ball, 0.0, 1.0), InvalidArgument);
}

TEST(Estimates, LoopLengthScalesWithConstantFactor) {
  const GridSpec s(24, 16, kTwoPi, 4.0);
  EXPECT_NEAR(estimate::loop_length_through(ConformalMetric::flat(s), {3, 3}), 4.0, 1e-12);
  const ConformalMetric scaled(ScalarField(s, std::log(2.0)));
  EXPECT_NEAR(estimate::loop_length_through(scaled, {3, 3}), 8.0, 1e-12);
}

class PositiveMode : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    traj_ = new flow::FlowTrajectory(
        evolve(64, zero, [](double x, double) { return 1.0 + 0.5 * std::sin(x); }, 1.0, 20));
  }
  static void TearDownTestSuite() { delete traj_; }
  static flow::FlowTrajectory* traj_;
};
flow::FlowTrajectory* PositiveMode::traj_ = nullptr;

TEST_F(PositiveMode, ZhangRatioMatchesScanAndStaysBelowOne) {
  const estimate::EstimateReport rep = estimate::check_zhang(*traj_, 1.5);
  const GridSpec& s = traj_->spec();
  double best = 0.0;
  for (std::size_t n = 1; n < traj_->size(); ++n) {
    const ScalarField& u = (*traj_)[n].u;
    const double t = (*traj_)[n].t();
    for (int j = 0; j < s.ny(); ++j)
      for (int i = 0; i < s.nx(); ++i) {
        const double ux = (u(i + 1, j) - u(i - 1, j)) / (2 * s.hx());
        const double uy = (u(i, j + 1) - u(i, j - 1)) / (2 * s.hy());
        const double g = std::sqrt(ux * ux + uy * uy) / u(i, j);
        if (g > 0) best = std::max(best, g / std::sqrt(std::log(1.5 / u(i, j)) / t));
      }
  }
  EXPECT_NEAR(rep.sup_ratio, best, 1e-12 * best);
  EXPECT_LE(rep.sup_ratio, 1.0);
  EXPECT_TRUE(rep.pass());
  EXPECT_EQ(rep.flags, 0u);
}

TEST_F(PositiveMode, LaplacianBoundHoldsWithLedgerB) {
  const constants::ConstantLedger ledger;
  const estimate::EstimateReport rep = estimate::check_laplacian_bound(*traj_, 1.5, ledger.B());
  EXPECT_TRUE(rep.pass()) << rep.sup_ratio;
  EXPECT_EQ(rep.constant_used, ledger.B());
  // Flat: (|u_xx| + u_x²/u) t / a, sampled from the same data.
  const GridSpec& s = traj_->spec();
  double best = 0.0;
  for (std::size_t n = 1; n < traj_->size(); ++n) {
    const ScalarField& u = (*traj_)[n].u;
    for (int j = 0; j < s.ny(); ++j)
      for (int i = 0; i < s.nx(); ++i) {
        const double lap = (u(i + 1, j) + u(i - 1, j) - 2 * u(i, j)) / (s.hx() * s.hx()) +
                           (u(i, j + 1) + u(i, j - 1) - 2 * u(i, j)) / (s.hy() * s.hy());
        const double ux = (u(i + 1, j) - u(i - 1, j)) / (2 * s.hx());
        best = std::max(best, (std::abs(lap) + ux * ux / u(i, j)) * (*traj_)[n].t() / 1.5);
      }
  }
  EXPECT_NEAR(rep.sup_ratio, best, 1e-12 * best);
}

TEST(Estimates, ZhangConventionsAndPositivity) {
  const auto constant = evolve(16, zero, [](double, double) { return 1.5; }, 0.1, 4);
  const estimate::EstimateReport c = estimate::check_zhang(constant, 1.5);
  EXPECT_EQ(c.sup_ratio, 0.0);
  EXPECT_EQ(c.flags, 0u);
  EXPECT_EQ(estimate::check_laplacian_bound(constant, 1.5, 1.0).sup_ratio, 0.0);
  const auto touching = evolve(16, zero, [](double x, double) { return 1.0 + std::sin(x); }, 0.1, 4);
  EXPECT_TRUE(estimate::check_zhang(touching, 2.0).flags & estimate::kBound);
  EXPECT_TRUE(estimate::check_laplacian_bound(touching, 2.0, 1.0).flags & estimate::kBound);
}

TEST(Estimates, CsvRow) {
  estimate::EstimateReport r;
  r.scenario = "flat-mode";
  r.id = "gradient";
  r.r = 1.0;
  r.a = 1.0;
  r.k = 1;
  r.sup_ratio = 0.25;
  r.constant_used = 2.0;
  r.flags = estimate::kCurvature;
  r.argmax_t = 0.5;
  r.argmax_x = 0.1;
  r.argmax_y = 3.0;
  EXPECT_EQ(estimate::csv_header(), "scenario,estimate,r,a,k,sup_ratio,constant_used,pass,flags,argmax_t,argmax_x,argmax_y");
  EXPECT_EQ(estimate::csv_row(r), "flat-mode,gradient,1,1,1,0.25,2,true,curvature,0.5,0.1,3");
}

}  // namespace
