#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rhl::constants {

// Polynomial in u, coefficients in increasing degree.
using Polynomial = std::vector<double>;

double evaluate(const Polynomial& p, double u);
Polynomial derivative(const Polynomial& p);

/// Product-rule expansion of (∂_t - Δ)[φ(u)|∇u|²] for a solution of the heat
/// equation:
///   φ(u)(∂_t - Δ)|∇u|² + |∇u|²(∂_t - Δ)φ(u) - 2<∇φ(u), ∇|∇u|²>
///   = hessian(u)|∇²u|² + quartic(u)|∇u|⁴ + cross(u) ∇²u(∇u, ∇u)
/// using (∂_t - Δ)|∇u|² = -2|∇²u|², (∂_t - Δ)φ(u) = -φ''(u)|∇u|² and
/// ∇|∇u|² = 2∇²u(∇u, ·).
struct BernsteinExpansion {
  Polynomial hessian;
  Polynomial quartic;
  Polynomial cross;
};
BernsteinExpansion expand_bernstein(const Polynomial& phi);

/// Smallest C with |cross(u)| <= C a for |u| <= a, for φ = A a² + u².
double derive_cross_constant();

/// γ constraint γ² >= p γ + q. Index k gives the constraint on γ_{k+1}.
struct QuadraticConstraint {
  double p;
  double q;
  double slack(double gamma) const { return gamma * gamma - p * gamma - q; }
};
QuadraticConstraint gamma_constraint(int k);         // k = 1: 7/2, 33/4; k >= 2: family
QuadraticConstraint gamma_family_constraint(int k);  // family formula, any k >= 1
double solve_gamma(int k);

/// β constraint LHS(β) - RHS(β) for β_{k+1}; k = 1 uses the dedicated form,
/// k >= 2 the family.
double beta_slack(int k, double beta, double alpha, double gamma, double extra_constant = 0.0);
double beta_family_slack(int k, double beta, double alpha, double gamma);
/// Smallest β with nonnegative slack. extra_constant is added to the right
/// side (used to probe monotonicity).
double solve_beta(int k, double alpha, double gamma, double extra_constant = 0.0);

double ledger_C1(double A1, double alpha1);

struct LaplacianConstantRoots {
  double first;   // B² - nB - n e^{-2} = 0
  double second;  // B² - 2nB - 2n(1 + 4/n)/ε² = 0
  double value() const { return first > second ? first : second; }
};
LaplacianConstantRoots solve_laplacian_constant(int n, double epsilon);
double solve_laplacian_constant(int n);  // ε read as e

// Flat-space supremum of the required α for Ψ_m, m >= 1: 24 / 4^{m-1}.
double flat_alpha(int m);

struct LedgerEntry {
  std::string symbol;
  int k = 0;
  double value = 0.0;
  std::string constraint;
  double slack = 0.0;
  std::string provenance;  // root-solved | derived | calibrated | override
};

struct LedgerOptions {
  int n = 2;
  double a = 1.0;
  int kmax = 3;                       // highest derivative order covered by C_k
  double curvature_constant = 8.0;    // C in the k >= 2 Bernstein bounds
  std::vector<double> alpha;          // α_1..α_kmax; empty = calibrated defaults
  std::map<std::string, double> overrides;  // symbol (e.g. "A1", "b2") -> forced value
};

/// Constants of the comparison arguments, each with a certified slack.
/// Equality constraints report slack = -|relative error|; inequality
/// constraints report LHS - RHS.
class ConstantLedger {
 public:
  static constexpr double kTolerance = 1e-12;

  explicit ConstantLedger(const LedgerOptions& options = {});

  // Throws LedgerViolation if any entry has slack < -kTolerance.
  static ConstantLedger certified(const LedgerOptions& options = {});

  int n() const { return n_; }
  double a() const { return a_; }
  int kmax() const { return kmax_; }
  double C_cross() const { return c_cross_; }
  double curvature_constant() const { return c_curv_; }

  double A(int k) const { return at(A_, k); }
  double b(int k) const { return at(b_, k); }
  double alpha(int k) const { return at(alpha_, k); }
  double beta(int k) const { return at(beta_, k); }
  double gamma(int k) const { return at(gamma_, k); }
  double C(int k) const { return at(C_, k); }
  double B() const { return B_; }
  double B_alternative() const { return B_alt_; }

  const std::vector<LedgerEntry>& entries() const { return entries_; }
  std::vector<LedgerEntry> violations() const;

  std::string to_csv() const;

 private:
  static double at(const std::vector<double>& v, int k);
  double pick(const std::string& symbol, double computed, std::string& provenance) const;
  void add(std::string symbol, int k, double value, std::string constraint, double slack, std::string provenance);

  std::map<std::string, double> overrides_;
  int n_;
  double a_;
  int kmax_;
  double c_cross_ = 0.0;
  double c_curv_ = 0.0;
  std::vector<double> A_, b_, alpha_, beta_, gamma_, C_;
  double B_ = 0.0;
  double B_alt_ = 0.0;
  std::vector<LedgerEntry> entries_;
};

}  // namespace rhl::constants
