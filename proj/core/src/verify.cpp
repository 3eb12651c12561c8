#include <cmath>

#include "rhl/constants.hpp"
#include "rhl/harness.hpp"
#include "rhl/text.hpp"

namespace rhl::harness {
namespace {

using text::number;

constexpr double kRootResidual = 1e-12;

Outcome outcome(std::string check, bool ok, std::string detail) {
  return {std::move(check), ok ? Status::Pass : Status::Fail, std::move(detail)};
}

}  // namespace

std::vector<Outcome> verify_constants(int n, int kmax) {
  std::vector<Outcome> out;

  const double g2 = constants::solve_gamma(1);
  const double closed = (3.5 + std::sqrt(181.0 / 4.0)) / 2.0;
  const double res2 = std::abs(constants::gamma_constraint(1).slack(g2));
  out.push_back(outcome("gamma2-root", res2 < kRootResidual && std::abs(g2 - closed) <= 1e-14 * closed && std::abs(g2 - 5.11340) < 1e-4 * g2,
                        "gamma2 " + number(g2) + ", closed form " + number(closed) + ", residual " + number(res2)));

  const auto family = constants::gamma_family_constraint(1);
  const auto dedicated = constants::gamma_constraint(1);
  out.push_back(outcome("gamma-family-k1", family.p == dedicated.p && family.q == dedicated.q,
                        "family (" + number(family.p) + ", " + number(family.q) + ") vs (" + number(dedicated.p) +
                            ", " + number(dedicated.q) + ")"));

  for (int k = 2; k < kmax; ++k) {
    const double g = constants::solve_gamma(k);
    const auto c = constants::gamma_constraint(k);
    const double res = std::abs(c.slack(g)) / std::max(1.0, g * g);
    const bool larger = c.slack(g - 1e-6) < 0.0 && c.slack(g + 1e-6) > 0.0;
    out.push_back(outcome("gamma" + std::to_string(k + 1) + "-root", res < kRootResidual && larger,
                          "gamma " + number(g) + ", residual " + number(res)));
  }

  const auto roots = constants::solve_laplacian_constant(n, std::exp(1.0));
  const double nn = n;
  const double r1 = std::abs(roots.first * roots.first - nn * roots.first - nn * std::exp(-2.0));
  const double r2 = std::abs(roots.second * roots.second - 2 * nn * roots.second -
                             2 * nn * (1.0 + 4.0 / nn) / std::exp(2.0));
  const bool quoted = n != 2 || (std::abs(roots.first - 2.12724) < 1e-4 * roots.first && std::abs(roots.second - 4.37148) < 1e-4 * roots.second);
  out.push_back(outcome("B-roots", r1 < kRootResidual && r2 < kRootResidual && quoted,
                        "B_L1 " + number(roots.first) + " (residual " + number(r1) + "), B_L2 " + number(roots.second) +
                            " (residual " + number(r2) + ")"));

  const double c = constants::derive_cross_constant();
  const auto e = constants::expand_bernstein({16.0, 0.0, 1.0});
  out.push_back(outcome("C_cross", std::abs(c - 8.0) <= 1e-12 && e.cross.size() >= 2 && std::abs(e.cross[1] + 8.0) <= 1e-12,
                        "C_cross " + number(c) + " from the cross coefficient of the expansion"));
  out.push_back(outcome("A1", std::abs(c * c / 4.0 - 16.0) <= 1e-12, "A1 = C_cross^2 / 4 = " + number(c * c / 4.0)));

  constants::LedgerOptions o;
  o.n = n;
  o.kmax = kmax;
  const constants::ConstantLedger ledger(o);
  const auto bad = ledger.violations();
  std::string detail = std::to_string(ledger.entries().size()) + " entries";
  for (const auto& v : bad) detail += "; " + v.symbol + " slack " + number(v.slack);
  out.push_back(outcome("ledger", bad.empty(), detail));
  return out;
}

}  // namespace rhl::harness
