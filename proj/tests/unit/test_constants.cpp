#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "rhl/constants.hpp"
#include "rhl/errors.hpp"

namespace {

using namespace rhl;
using namespace rhl::constants;

TEST(CrossConstant, ProductRuleGivesEight) {
  EXPECT_EQ(derive_cross_constant(), 8.0);
  const BernsteinExpansion e = expand_bernstein({16.0, 0.0, 1.0});
  ASSERT_EQ(e.cross.size(), 2u);
  EXPECT_EQ(e.cross[0], 0.0);
  EXPECT_EQ(e.cross[1], -8.0);
  EXPECT_EQ(evaluate(e.quartic, 0.3), -2.0);
  EXPECT_EQ(evaluate(e.hessian, 0.5), -2.0 * (16.0 + 0.25));
}

// u = e^{-2t} sin x sin y solves the flat heat equation; compare
// (∂_t - Δ)[(A + u²)|∇u|²] by finite differences against the expansion.
TEST(CrossConstant, ExpansionMatchesFiniteDifferences) {
  const double A = 16.0;
  auto u = [](double x, double y, double t) { return std::exp(-2 * t) * std::sin(x) * std::sin(y); };
  auto G = [&](double x, double y, double t) {
    const double e = std::exp(-2 * t);
    const double ux = e * std::cos(x) * std::sin(y);
    const double uy = e * std::sin(x) * std::cos(y);
    const double v = u(x, y, t);
    return (A + v * v) * (ux * ux + uy * uy);
  };
  const BernsteinExpansion ex = expand_bernstein({A, 0.0, 1.0});
  const double h = 1e-3;
  for (auto [x, y, t] : {std::array<double, 3>{0.3, 1.1, 0.2}, {2.0, -0.7, 0.5}, {1.4, 0.9, 0.05}}) {
    const double dt = (G(x, y, t + h) - G(x, y, t - h)) / (2 * h);
    const double lap = (G(x + h, y, t) + G(x - h, y, t) + G(x, y + h, t) + G(x, y - h, t) - 4 * G(x, y, t)) / (h * h);
    const double e = std::exp(-2 * t);
    const double v = u(x, y, t);
    const double ux = e * std::cos(x) * std::sin(y);
    const double uy = e * std::sin(x) * std::cos(y);
    const double uxx = -v;
    const double uyy = -v;
    const double uxy = e * std::cos(x) * std::cos(y);
    const double grad2 = ux * ux + uy * uy;
    const double hess2 = uxx * uxx + 2 * uxy * uxy + uyy * uyy;
    const double huu = uxx * ux * ux + 2 * uxy * ux * uy + uyy * uy * uy;
    const double rhs = evaluate(ex.hessian, v) * hess2 + evaluate(ex.quartic, v) * grad2 * grad2 + evaluate(ex.cross, v) * huu;
    EXPECT_NEAR(dt - lap, rhs, 1e-4);
  }
}

TEST(Gamma, FirstRootCertified) {
  const double g = solve_gamma(1);
  EXPECT_NEAR(g, (3.5 + std::sqrt(181.0 / 4.0)) / 2.0, 1e-14);
  EXPECT_NEAR(g, 5.11340, 1e-5);
  const QuadraticConstraint c = gamma_constraint(1);
  EXPECT_GE(c.slack(g), 0.0);
  EXPECT_LT(c.slack(g), 1e-12);
  EXPECT_LT(c.slack(g - 1e-6), 0.0);
  EXPECT_GT(c.slack(g + 1e-6), 0.0);
  EXPECT_GE(c.slack(6.0), 0.0);
  EXPECT_LT(c.slack(5.0), 0.0);
}

TEST(Gamma, FamilyReproducesFirstConstraint) {
  const QuadraticConstraint fam = gamma_family_constraint(1);
  EXPECT_EQ(fam.p, 3.5);
  EXPECT_EQ(fam.q, 8.25);
  for (int k = 2; k <= 5; ++k) {
    const double g = solve_gamma(k);
    const QuadraticConstraint c = gamma_constraint(k);
    EXPECT_GE(c.slack(g), 0.0);
    EXPECT_LT(c.slack(g - 1e-6), 0.0);
  }
}

TEST(Beta, SubstitutionCertificate) {
  const double gamma = solve_gamma(1);
  const double beta = solve_beta(1, 1.0, gamma);
  // α = 1: α³ + 4α² = 5.
  const double direct = beta * beta - 0.75 * std::pow(10.0 * beta, 4.0 / 3.0) - 0.625 * beta - (gamma / 2 + 8) / 48;
  EXPECT_GE(direct, -1e-12);
  EXPECT_GE(beta_slack(1, beta, 1.0, gamma), 0.0);
  EXPECT_LT(beta_slack(1, beta * (1 - 1e-9), 1.0, gamma), 0.0);
}

TEST(Beta, MonotoneInAlphaAndConstant) {
  const double gamma = solve_gamma(1);
  EXPECT_LT(solve_beta(1, 20.0, gamma), solve_beta(1, 10.0, gamma));
  EXPECT_GT(solve_beta(1, 6.0, gamma, 1.0), solve_beta(1, 6.0, gamma));
  const double g3 = solve_gamma(2);
  const double b3 = solve_beta(2, 1.5, g3);
  EXPECT_GE(beta_family_slack(2, b3, 1.5, g3), 0.0);
}

TEST(Beta, FamilyDiffersFromDedicatedFormAtFirstIndex) {
  // Same Young and linear terms, different additive constant: (γ+16)/2^17 vs (γ+16)/96.
  const double g = solve_gamma(1);
  const double diff = beta_family_slack(1, 0.5, 6.0, g) - beta_slack(1, 0.5, 6.0, g);
  EXPECT_NEAR(diff, (g + 16.0) / 96.0 - (g + 16.0) / std::ldexp(1.0, 17), 1e-12);
}

TEST(LedgerC1, ExtractionFormula) {
  EXPECT_DOUBLE_EQ(ledger_C1(16.0, 9.0 / 16.0), 4.25);
  EXPECT_LE(ledger_C1(16.0, 1.0), ledger_C1(16.0, 2.0));
  LedgerOptions o1;
  LedgerOptions o2;
  o2.a = 3.0;
  EXPECT_EQ(ConstantLedger(o1).C(1), ConstantLedger(o2).C(1));
}

TEST(LaplacianConstant, RootsForSurfaces) {
  const LaplacianConstantRoots r = solve_laplacian_constant(2, std::numbers::e);
  EXPECT_NEAR(r.first, 2.12724, 5e-6);
  EXPECT_NEAR(r.second, 2.0 + std::sqrt(4.0 + 12.0 * std::exp(-2.0)), 1e-15);
  EXPECT_NEAR(r.second, 4.37148, 3e-5);
  EXPECT_LT(std::abs(r.first * r.first - 2 * r.first - 2 * std::exp(-2.0)), 1e-12);
  EXPECT_LT(std::abs(r.second * r.second - 4 * r.second - 12 * std::exp(-2.0)), 1e-12);
  EXPECT_EQ(solve_laplacian_constant(2), r.second);
  EXPECT_NEAR(solve_laplacian_constant(2, 1.0).second, 6.0, 1e-14);
  EXPECT_THROW(solve_laplacian_constant(1), InvalidArgument);
}

TEST(ConstantLedger, DefaultIsCertified) {
  const ConstantLedger l = ConstantLedger::certified();
  EXPECT_EQ(l.C_cross(), 8.0);
  EXPECT_EQ(l.A(1), 16.0);
  EXPECT_DOUBLE_EQ(l.b(1), 1.0 / 289.0);
  EXPECT_NEAR(l.gamma(2), 5.11340, 1e-5);
  EXPECT_NEAR(l.B(), 4.37148, 3e-5);
  EXPECT_EQ(l.alpha(1), 24.0);
  EXPECT_GT(l.C(2), l.C(1));
  EXPECT_GT(l.C(3), 0.0);
  EXPECT_TRUE(l.violations().empty());
  for (const LedgerEntry& e : l.entries()) EXPECT_GE(e.slack, -ConstantLedger::kTolerance) << e.symbol;
}

TEST(ConstantLedger, NormalizersScaleAsInverseFourthPower) {
  LedgerOptions o;
  const ConstantLedger one(o);
  o.a = 2.0;
  const ConstantLedger two(o);
  for (int k = 1; k <= 3; ++k) {
    EXPECT_NEAR(two.b(k) * 16.0 / one.b(k), 1.0, 1e-15);
    EXPECT_EQ(two.C(k), one.C(k));
  }
}

TEST(ConstantLedger, CorruptedWeightIsFlagged) {
  LedgerOptions o;
  o.overrides["A1"] = 0.01;
  const ConstantLedger l(o);
  const auto bad = l.violations();
  ASSERT_FALSE(bad.empty());
  EXPECT_EQ(bad.front().symbol, "A1");
  EXPECT_THROW(ConstantLedger::certified(o), LedgerViolation);
  o.overrides = {{"b2", 1.0}};
  EXPECT_THROW(ConstantLedger::certified(o), LedgerViolation);
  o.overrides = {{"nonsense", 1.0}};
  EXPECT_THROW(ConstantLedger{o}, InvalidArgument);
}

TEST(ConstantLedger, CsvHasOneRowPerEntry) {
  const ConstantLedger l;
  const std::string csv = l.to_csv();
  EXPECT_EQ(csv.rfind("symbol,k,value,constraint,slack,provenance\n", 0), 0u);
  std::size_t rows = 0;
  for (char c : csv) rows += c == '\n';
  EXPECT_EQ(rows, l.entries().size() + 1);
  EXPECT_NE(csv.find("gamma2,2,5.1134"), std::string::npos);
}

}  // namespace
