#include "rhl/constants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "rhl/errors.hpp"
#include "rhl/text.hpp"

namespace rhl::constants {
namespace {

Polynomial scale(Polynomial p, double s) {
  for (double& c : p) c *= s;
  return p;
}

double relative_gap(double value, double formula) {
  const double denom = std::max(std::abs(formula), std::numeric_limits<double>::min());
  return -std::abs(value - formula) / denom;
}

// Walk up from a rounded root until the constraint holds exactly in floating point.
template <typename Slack>
double certify_upward(double x, Slack slack) {
  while (slack(x) < 0.0) x = std::nextafter(x, std::numeric_limits<double>::infinity());
  return x;
}

}  // namespace

double evaluate(const Polynomial& p, double u) {
  double out = 0.0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) out = out * u + *it;
  return out;
}

Polynomial derivative(const Polynomial& p) {
  if (p.size() <= 1) return {0.0};
  Polynomial out(p.size() - 1);
  for (std::size_t d = 1; d < p.size(); ++d) out[d - 1] = static_cast<double>(d) * p[d];
  return out;
}

BernsteinExpansion expand_bernstein(const Polynomial& phi) {
  // φ (∂_t - Δ)|∇u|²          -> -2φ |∇²u|²
  // |∇u|² (∂_t - Δ)φ(u)        -> -φ'' |∇u|⁴
  // -2<φ' ∇u, 2∇²u(∇u, ·)>     -> -4φ' ∇²u(∇u, ∇u)
  return BernsteinExpansion{scale(phi, -2.0), scale(derivative(derivative(phi)), -1.0),
                            scale(derivative(phi), -4.0)};
}

double derive_cross_constant() {
  // a = 1 by homogeneity; A only shifts the constant term, which the cross term never sees.
  const BernsteinExpansion e = expand_bernstein({1.0, 0.0, 1.0});
  // |cross(u)| is a polynomial in u; its max on [-1, 1] is at an endpoint or critical point.
  double best = std::max(std::abs(evaluate(e.cross, -1.0)), std::abs(evaluate(e.cross, 1.0)));
  const Polynomial dc = derivative(e.cross);
  if (dc.size() == 2 && dc[1] != 0.0) {
    const double u = -dc[0] / dc[1];
    if (std::abs(u) <= 1.0) best = std::max(best, std::abs(evaluate(e.cross, u)));
  }
  return best;
}

QuadraticConstraint gamma_family_constraint(int k) {
  if (k < 1) throw InvalidArgument("gamma index must be at least 1");
  const double kd = k;
  const double p = std::ldexp(1.0, k - 1) * (kd + 1.0) * (1.0 + (kd + 2.0) / (2.0 * (kd + 1.0)));
  const double q = std::ldexp(1.0, 2 * k + 1) + kd / (2.0 * (kd + 1.0));
  return {p, q};
}

QuadraticConstraint gamma_constraint(int k) {
  if (k == 1) return {3.5, 8.25};
  return gamma_family_constraint(k);
}

double solve_gamma(int k) {
  const QuadraticConstraint c = gamma_constraint(k);
  const double root = 0.5 * (c.p + std::sqrt(c.p * c.p + 4.0 * c.q));
  return certify_upward(root, [&](double g) { return c.slack(g); });
}

double beta_slack(int k, double beta, double alpha, double gamma, double extra_constant) {
  if (k == 1) {
    const double s = alpha * alpha * alpha + 4.0 * alpha * alpha;
    const double lhs = beta * beta * std::pow(alpha, 4);
    const double rhs = 0.75 * std::pow(2.0 * beta * s, 4.0 / 3.0) + 0.125 * beta * s + (gamma / 2.0 + 8.0) / 48.0;
    return lhs - rhs - extra_constant;
  }
  return beta_family_slack(k, beta, alpha, gamma) - extra_constant;
}

double beta_family_slack(int k, double beta, double alpha, double gamma) {
  const double kd = k;
  const double s = std::pow(alpha, kd + 2.0) + kd / std::pow(4.0, kd - 2.0) * std::pow(alpha, kd + 1.0);
  const double lhs = beta * beta * std::pow(alpha, 2.0 * (kd + 1.0));
  const double young = (kd + 2.0) / (2.0 * (kd + 1.0)) *
                       std::pow(std::ldexp(1.0, k - 1) * beta * (kd + 1.0) * s, 2.0 * (kd + 1.0) / (kd + 2.0));
  const double linear = beta * (kd + 1.0) / std::ldexp(1.0, 4 * k * k - k + 1) * s;
  const double constant = (kd * gamma + std::ldexp(1.0, k + 3)) / std::ldexp(1.0, 8 * k * k + 7 * k + 2);
  return lhs - young - linear - constant;
}

double solve_beta(int k, double alpha, double gamma, double extra_constant) {
  if (!(alpha > 0.0) || !(gamma > 0.0)) throw InvalidArgument("solve_beta needs alpha, gamma > 0");
  auto slack = [&](double b) { return beta_slack(k, b, alpha, gamma, extra_constant); };
  double lo = 1e-6;
  double hi = 1.0;
  if (slack(lo) >= 0.0) return lo;
  while (slack(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > std::ldexp(1.0, 60)) throw ConfigError("no beta bracket below 2^60", "alpha");
  }
  for (int it = 0; it < 400 && std::nextafter(lo, hi) < hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (slack(mid) >= 0.0 ? hi : lo) = mid;
  }
  return hi;
}

double ledger_C1(double A1, double alpha1) {
  // On PB_{r/2}: r² - d² >= 3r²/4, so b₁A₁a²|∇u|² <= (16α₁/9)/r² + 1/t
  // <= max(16α₁/9, 1)(1/r² + 1/t); take square roots with √(x + y) <= √x + √y.
  return (A1 + 1.0) * std::sqrt(std::max(16.0 * alpha1 / 9.0, 1.0) / A1);
}

LaplacianConstantRoots solve_laplacian_constant(int n, double epsilon) {
  if (n < 2) throw InvalidArgument("dimension must be at least 2");
  const double nd = n;
  const double c1 = nd * std::exp(-2.0);
  const double c2 = 2.0 * nd * (1.0 + 4.0 / nd) / (epsilon * epsilon);
  const double first = 0.5 * (nd + std::sqrt(nd * nd + 4.0 * c1));
  const double second = nd + std::sqrt(nd * nd + c2);
  return {first, second};
}

double solve_laplacian_constant(int n) { return solve_laplacian_constant(n, std::numbers::e).value(); }

double flat_alpha(int m) {
  if (m < 1) throw InvalidArgument("barrier index must be at least 1");
  return 24.0 / std::pow(4.0, m - 1);
}

ConstantLedger::ConstantLedger(const LedgerOptions& options)
    : overrides_(options.overrides), n_(options.n), a_(options.a), kmax_(options.kmax) {
  if (n_ < 2) throw InvalidArgument("ledger dimension must be at least 2");
  if (!(a_ > 0.0)) throw InvalidArgument("ledger bound a must be positive");
  if (kmax_ < 1) throw InvalidArgument("ledger kmax must be at least 1");
  if (!options.alpha.empty() && static_cast<int>(options.alpha.size()) < kmax_) {
    throw InvalidArgument("alpha list shorter than kmax");
  }

  const std::size_t size = static_cast<std::size_t>(kmax_) + 1;
  A_.assign(size, 0.0);
  b_ = alpha_ = beta_ = gamma_ = C_ = A_;
  const double a4 = std::pow(a_, 4);
  std::string prov;

  c_cross_ = pick("C_cross", derive_cross_constant(), prov);
  add("C_cross", 0, c_cross_, "|-4 phi'(u)| <= C a for |u| <= a", relative_gap(c_cross_, derive_cross_constant()), prov);
  c_curv_ = pick("C_curv", options.curvature_constant, prov);
  add("C_curv", 0, c_curv_, "chosen constant in the k >= 2 Bernstein bounds", 0.0, prov == "derived" ? "chosen" : prov);

  for (int m = 1; m <= kmax_; ++m) {
    const double a_cal = options.alpha.empty() ? flat_alpha(m) : options.alpha[static_cast<std::size_t>(m - 1)];
    const std::string sym = "alpha" + std::to_string(m);
    alpha_[m] = pick(sym, a_cal, prov);
    add(sym, m, alpha_[m], "(d_t - Delta) Psi_m >= -Psi_m^2 on the calibration set", alpha_[m] > 0.0 ? 0.0 : -1.0,
        prov == "derived" ? "calibrated" : prov);
  }

  // k = 1
  A_[1] = pick("A1", std::max(c_cross_ * c_cross_ / 4.0, 1.0), prov);
  add("A1", 1, A_[1], "A1 >= C^2/4", A_[1] - c_cross_ * c_cross_ / 4.0, prov);
  b_[1] = pick("b1", 1.0 / ((A_[1] + 1.0) * (A_[1] + 1.0) * a4), prov);
  add("b1", 1, b_[1], "b1 = 1/((A1+1)^2 a^4)", relative_gap(b_[1], 1.0 / ((A_[1] + 1.0) * (A_[1] + 1.0) * a4)), prov);
  C_[1] = pick("C1", ledger_C1(A_[1], alpha_[1]), prov);
  add("C1", 1, C_[1], "C1 = (A1+1) sqrt(max(16 alpha1/9, 1)/A1)", relative_gap(C_[1], ledger_C1(A_[1], alpha_[1])), prov);

  // k + 1 = m >= 2
  for (int m = 2; m <= kmax_; ++m) {
    const int k = m - 1;
    const std::string km = std::to_string(m);
    const QuadraticConstraint gc = gamma_constraint(k);
    gamma_[m] = pick("gamma" + km, solve_gamma(k), prov);
    add("gamma" + km, m, gamma_[m], k == 1 ? "gamma^2 >= 7 gamma/2 + 33/4" : "gamma^2 >= p_k gamma + q_k",
        gc.slack(gamma_[m]), prov == "derived" ? "root-solved" : prov);

    beta_[m] = pick("beta" + km, solve_beta(k, alpha_[m], gamma_[m]), prov);
    add("beta" + km, m, beta_[m], k == 1 ? "beta^2 alpha^4 >= 3/4 (2 beta s)^(4/3) + beta s/8 + (gamma/2+8)/48" : "beta family inequality",
        beta_slack(k, beta_[m], alpha_[m], gamma_[m]), prov == "derived" ? "root-solved" : prov);

    const double a_req = c_curv_ * c_curv_ * C_[m - 1] * C_[m - 1];
    A_[m] = pick("A" + km, a_req, prov);
    add("A" + km, m, A_[m], "A >= C^2 C_{k}^2", A_[m] - a_req, prov);

    const double w = A_[m] + 2.0 * C_[m - 1] * C_[m - 1];
    const double q = k == 1 ? 2.0 + c_curv_ * c_curv_ : c_curv_ + 2.0 * k * k;
    const double b_formula = 1.0 / (q * w * w * a4);
    b_[m] = pick("b" + km, b_formula, prov);
    add("b" + km, m, b_[m], k == 1 ? "b2 = 1/((A2+2C1^2)^2 a^4 (2+C^2))" : "b = 1/((C+2k^2)(A+2C_k^2)^2 a^4)",
        relative_gap(b_[m], b_formula), prov);

    // On PB_{r/2^m}: r²/4^k - s² >= 3r²/4^m.
    const double space = beta_[m] * std::pow(alpha_[m], m) * std::pow(std::pow(4.0, m) / 3.0, 2.0 * m);
    const double c_formula = w * std::sqrt(std::ldexp(1.0, k - 1) * q * std::max(space, gamma_[m]) / A_[m]);
    C_[m] = pick("C" + km, c_formula, prov);
    add("C" + km, m, C_[m], "C = (A+2C_k^2) sqrt(2^(k-1) q max(beta alpha^m (4^m/3)^(2m), gamma)/A)",
        relative_gap(C_[m], c_formula), prov == "derived" ? "calibrated" : prov);
  }

  const LaplacianConstantRoots roots = solve_laplacian_constant(n_, std::numbers::e);
  const LaplacianConstantRoots alt = solve_laplacian_constant(n_, 1.0);
  const double nd = n_;
  const double e2 = std::exp(-2.0);
  add("B_L1", 0, roots.first, "(B + e^-2)/B^2 = 1/n",
      relative_gap((roots.first + e2) / (roots.first * roots.first), 1.0 / nd), "root-solved");
  const double c2 = (1.0 + 4.0 / nd) * e2;
  add("B_L2", 0, roots.second, "1/B + (1+4/n)/eps^2/B^2 = 1/(2n), eps = e",
      relative_gap(1.0 / roots.second + c2 / (roots.second * roots.second), 0.5 / nd), "root-solved");
  add("B_L2_eps1", 0, alt.second, "1/B + (1+4/n)/B^2 = 1/(2n), eps = 1",
      relative_gap(1.0 / alt.second + (1.0 + 4.0 / nd) / (alt.second * alt.second), 0.5 / nd), "root-solved");
  B_ = pick("B", roots.value(), prov);
  add("B", 0, B_, "B >= max(B_L1, B_L2)", B_ - roots.value(), prov);
  B_alt_ = alt.value();
  add("B_alt", 0, B_alt_, "max(B_L1, B_L2_eps1)", 0.0, "derived");

  for (const auto& [symbol, value] : overrides_) {
    const bool known = std::any_of(entries_.begin(), entries_.end(), [&](const LedgerEntry& e) { return e.symbol == symbol; });
    if (!known) throw InvalidArgument("unknown ledger symbol '" + symbol + "'");
  }
}

ConstantLedger ConstantLedger::certified(const LedgerOptions& options) {
  ConstantLedger ledger(options);
  const auto bad = ledger.violations();
  if (!bad.empty()) {
    std::ostringstream os;
    os << "ledger constraint violated:";
    for (const LedgerEntry& e : bad) os << ' ' << e.symbol << " (" << e.constraint << ", slack " << e.slack << ')';
    throw LedgerViolation(os.str());
  }
  return ledger;
}

std::vector<LedgerEntry> ConstantLedger::violations() const {
  std::vector<LedgerEntry> out;
  for (const LedgerEntry& e : entries_) {
    if (!(e.slack >= -kTolerance) || !std::isfinite(e.value)) out.push_back(e);
  }
  return out;
}

std::string ConstantLedger::to_csv() const {
  std::ostringstream os;
  os << "symbol,k,value,constraint,slack,provenance\n";
  for (const LedgerEntry& e : entries_) {
    os << e.symbol << ',' << e.k << ',' << text::number(e.value) << ',' << text::csv_field(e.constraint) << ','
       << text::number(e.slack) << ',' << e.provenance << '\n';
  }
  return os.str();
}

double ConstantLedger::at(const std::vector<double>& v, int k) {
  if (k < 0 || k >= static_cast<int>(v.size())) throw InvalidArgument("ledger index out of range");
  return v[static_cast<std::size_t>(k)];
}

double ConstantLedger::pick(const std::string& symbol, double computed, std::string& provenance) const {
  if (auto it = overrides_.find(symbol); it != overrides_.end()) {
    provenance = "override";
    return it->second;
  }
  provenance = "derived";
  return computed;
}

void ConstantLedger::add(std::string symbol, int k, double value, std::string constraint, double slack,
                         std::string provenance) {
  entries_.push_back({std::move(symbol), k, value, std::move(constraint), slack, std::move(provenance)});
}

}  // namespace rhl::constants
