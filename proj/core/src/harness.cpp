#include "rhl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

#include "rhl/errors.hpp"
#include "rhl/geometry.hpp"
#include "rhl/text.hpp"

namespace rhl::harness {
namespace {

using text::number;

constexpr double kGridBarrierTolerance = 1e-9;
constexpr double kSphereBarrierTolerance = 1e-9;
constexpr double kSphereEntropyTolerance = 1e-12;
constexpr double kEntropyDefectRelative = 1e-2;
constexpr double kConjugateOrder = 1.8;
constexpr double kConservationTolerance = 1e-6;
constexpr unsigned kHypothesisFlags = estimate::kCurvature | estimate::kBound | estimate::kWraps;

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << body;
}

barrier::Params barrier_params(const std::string& id, const constants::ConstantLedger& L, double r) {
  barrier::Params p;
  p.kind = id.rfind("psi", 0) == 0 ? barrier::Kind::Psi : barrier::Kind::Phi;
  p.m = id.back() - '0';
  p.alpha = L.alpha(p.m);
  if (p.kind == barrier::Kind::Phi && p.m >= 2) {
    p.beta = L.beta(p.m);
    p.gamma = L.gamma(p.m);
  }
  p.r = r;
  return p;
}

class Runner {
 public:
  Runner(const Scenario& s, std::filesystem::path out) : s_(s), out_(std::move(out)) {
    rep_.scenario = s.name;
    rep_.ledger = constants::ConstantLedger(s.ledger);
  }

  RunReport run() {
    std::filesystem::create_directories(out_);
    write_file(out_ / "config.ini", s_.source);
    write_file(out_ / "ledger.csv", rep_.ledger.to_csv());
    ledger_outcome();
    if (s_.geometry == Geometry::Sphere) sphere();
    else torus();
    write_summary();
    return std::move(rep_);
  }

 private:
  void add(std::string check, Status status, std::string detail) {
    rep_.outcomes.push_back({std::move(check), status, std::move(detail)});
  }

  void ledger_outcome() {
    const auto v = rep_.ledger.violations();
    std::string detail = v.empty() ? "all constraints certified" : "";
    for (const auto& e : v) detail += (detail.empty() ? "" : "; ") + e.symbol + " slack " + number(e.slack);
    add("ledger", v.empty() ? Status::Pass : Status::Fail, detail);
  }

  // ---- sphere -----------------------------------------------------------

  void sphere() {
    const int n = s_.n;
    for (const std::string& id : s_.checks.barriers) {
      const barrier::Params p = barrier_params(id, rep_.ledger, s_.checks.ball_r);
      const auto window = barrier::sphere_window(n, p.r, p.m, 40, 25);
      const auto a = barrier::check_sphere(p, n, window, kSphereBarrierTolerance);
      BarrierRecord b{barrier::kind_name(p), "sphere", a.samples, 0, a.worst_relative, a.tolerance, a.pass()};
      rep_.barriers.push_back(b);
      add("barrier-" + id, b.pass ? Status::Pass : Status::Fail,
          "worst relative margin " + number(a.worst_relative) + " over " + std::to_string(a.samples) + " samples");
    }
    write_barriers();
    if (s_.checks.entropy) {
      const flow::SphereModel model(n);
      const double T = model.blowup_time();
      const double W0 = entropy::sphere_record(model, 0.5 * T).W;
      double worst_w = 0.0, worst_rhs = 0.0, worst_dw = 0.0;
      for (int i = 1; i <= 9; ++i) {
        const double t = T * i / 10.0;
        const auto r = entropy::sphere_record(model, t, 1e-3 * (T - t));
        rep_.entropy.push_back(r);
        worst_w = std::max(worst_w, std::abs(r.W - W0));
        worst_rhs = std::max(worst_rhs, std::abs(r.rhs_integral));
        worst_dw = std::max(worst_dw, std::abs(r.dW_dt_measured));
      }
      const bool ok = worst_w <= kSphereEntropyTolerance && worst_rhs <= kSphereEntropyTolerance;
      add("entropy-sphere", ok ? Status::Pass : Status::Fail,
          "W = " + number(W0) + ", max |W - W(T/2)| " + number(worst_w) + ", max |rhs| " + number(worst_rhs) +
              ", max |dW/dt| " + number(worst_dw));
      write_entropy();
    }
  }

  // ---- torus ------------------------------------------------------------

  void torus() {
    const int levels = s_.checks.levels;
    std::vector<std::unique_ptr<flow::FlowTrajectory>> traj;
    for (int L = 0; L < levels; ++L) {
      traj.push_back(std::make_unique<flow::FlowTrajectory>(flow::run_coupled_flow(s_.run_config(L)).trajectory));
      rep_.level_h.push_back(s_.grid(L).h());
    }
    const flow::FlowTrajectory& base = *traj[0];
    flow::write_trajectory(out_ / "trajectory.bin", base, s_.source);
    const double T = s_.final_time;
    const estimate::ParabolicBall ball = estimate::parabolic_ball(base, s_.ball_center(0), s_.checks.ball_r, T);

    estimates(base, ball);
    identities(traj);
    bernstein(traj, T);
    barriers(base);
    if (s_.checks.entropy) entropy_checks(traj, T);
    if (s_.checks.conservation) conservation(base);
  }

  void estimates(const flow::FlowTrajectory& traj, const estimate::ParabolicBall& ball) {
    if (s_.checks.estimates.empty()) return;
    const double a = s_.checks.a;
    const auto& L = rep_.ledger;
    std::ostringstream csv;
    csv << estimate::csv_header() << '\n';
    for (const std::string& id : s_.checks.estimates) {
      estimate::EstimateReport r;
      if (id == "gradient") r = estimate::check_gradient(traj, ball, a, L.C(1));
      else if (id == "hessian") r = estimate::check_hessian(traj, ball, a, L.C(2));
      else if (id == "higher3") r = estimate::check_higher(traj, ball, a, 3, L.C(3));
      else if (id == "gradient-uniform") r = estimate::check_time_uniform(traj, ball, a, 1, L.C(1));
      else if (id == "hessian-uniform") r = estimate::check_time_uniform(traj, ball, a, 2, L.C(2));
      else if (id == "shi1" || id == "shi2") {
        const double c = s_.checks.shi_constant > 0.0 ? s_.checks.shi_constant : std::numeric_limits<double>::infinity();
        r = estimate::check_shi_curvature(traj, ball, id.back() - '0', c);
      } else if (id == "zhang") r = estimate::check_zhang(traj, a);
      else r = estimate::check_laplacian_bound(traj, a, L.B());
      r.scenario = s_.name;
      if (!L.violations().empty()) r.flags |= estimate::kLedger;
      csv << estimate::csv_row(r) << '\n';

      Status st = r.pass() ? Status::Pass : Status::Fail;
      if (r.flags & estimate::kLedger) st = Status::Fail;
      else if (!r.pass() && (r.flags & (kHypothesisFlags | estimate::kInitialSlice))) st = Status::Skipped;
      add("estimate-" + id, st,
          "sup_ratio " + number(r.sup_ratio) + " vs " + number(r.constant_used) + ", flags " +
              estimate::flag_names(r.flags));
      rep_.estimates.push_back(std::move(r));
    }
    write_file(out_ / "estimates.csv", csv.str());
  }

  void identities(const std::vector<std::unique_ptr<flow::FlowTrajectory>>& traj) {
    if (s_.checks.identities.empty()) return;
    std::vector<const flow::FlowTrajectory*> levels;
    for (const auto& t : traj) levels.push_back(t.get());
    std::ostringstream csv;
    csv << "k,level,h,spacing,sup_residual,c_fit,fit_points,ratio,order\n";
    for (int k : s_.checks.identities) {
      identity::ConvergenceRecord rec;
      rec.k = k;
      for (const auto* t : levels) rec.levels.push_back(identity::check_identity_residual(*t, k));
      const auto ratios = rec.ratios();
      const auto orders = rec.orders();
      std::vector<double> hs, res;
      for (std::size_t i = 0; i < rec.levels.size(); ++i) {
        const auto& l = rec.levels[i];
        csv << k << ',' << i << ',' << number(l.h) << ',' << number(l.spacing) << ',' << number(l.sup_residual) << ','
            << number(l.c_fit) << ',' << l.fit_points << ',' << (i ? number(ratios[i - 1]) : "") << ','
            << (i ? number(orders[i - 1]) : "") << '\n';
        hs.push_back(l.h);
        res.push_back(l.sup_residual);
      }
      write_file(out_ / ("identity_k" + std::to_string(k) + ".svg"),
                 convergence_svg("|(d/dt - Δ)|∇^" + std::to_string(k) + "u|² + 2|∇^" + std::to_string(k + 1) +
                                     "u|²|, sup norm",
                                 hs, res));
      identity_outcome(rec);
      rep_.identities.push_back(std::move(rec));
    }
    write_file(out_ / "identities.csv", csv.str());
  }

  void identity_outcome(const identity::ConvergenceRecord& rec) {
    const std::string check = "identity-k" + std::to_string(rec.k);
    const auto& lv = rec.levels;
    if (lv.size() < 2) {
      add(check, Status::Skipped, "single level, sup residual " + number(lv[0].sup_residual));
      return;
    }
    const bool curved = lv[0].c_fit > 0.0;
    if (rec.k >= 2 && curved) {
      double lo = lv[0].c_fit, hi = lv[0].c_fit;
      for (const auto& l : lv) lo = std::min(lo, l.c_fit), hi = std::max(hi, l.c_fit);
      const bool ok = std::isfinite(hi) && lo > 0.0 && hi / lo <= 2.0;
      add(check, ok ? Status::Pass : Status::Fail,
          "c_fit from " + number(lv.front().c_fit) + " to " + number(lv.back().c_fit) + ", spread " + number(hi / lo));
      return;
    }
    bool decreasing = true;
    for (double r : rec.ratios()) decreasing = decreasing && r > 1.0;
    add(check, decreasing ? Status::Pass : Status::Fail,
        "sup residual " + number(lv.front().sup_residual) + " -> " + number(lv.back().sup_residual) + ", ratio " +
            number(rec.ratios().back()));
  }

  void bernstein(const std::vector<std::unique_ptr<flow::FlowTrajectory>>& traj, double T) {
    if (s_.checks.bernstein.empty()) return;
    std::ostringstream csv;
    csv << "m,level,h,sup_defect,scale,tolerance,pass,flags,argmax_t\n";
    std::vector<estimate::ParabolicBall> balls;
    for (std::size_t L = 0; L < traj.size(); ++L)
      balls.push_back(estimate::parabolic_ball(*traj[L], s_.ball_center(static_cast<int>(L)), s_.checks.ball_r, T));
    for (int m : s_.checks.bernstein) {
      std::vector<identity::BernsteinReport> per_level;
      for (std::size_t L = 0; L < traj.size(); ++L) {
        const auto r = identity::check_bernstein(*traj[L], balls[L], rep_.ledger, m);
        csv << m << ',' << L << ',' << number(rep_.level_h[L]) << ',' << number(r.sup_defect) << ','
            << number(r.scale) << ',' << number(r.tolerance) << ',' << (r.pass() ? "true" : "false") << ','
            << estimate::flag_names(r.flags) << ',' << number(r.argmax_t) << '\n';
        per_level.push_back(r);
      }
      const auto& first = per_level.front();
      bool ok = true;
      for (std::size_t L = 0; L < per_level.size(); ++L) {
        ok = ok && per_level[L].pass();
        if (L) ok = ok && per_level[L].sup_defect <= per_level[L - 1].sup_defect;
      }
      Status st = ok ? Status::Pass : Status::Fail;
      if (first.flags & estimate::kLedger) st = Status::Fail;
      else if (!ok && (first.flags & kHypothesisFlags)) st = Status::Skipped;
      std::string detail = "defect";
      for (const auto& r : per_level) detail += ' ' + number(r.sup_defect);
      detail += ", tolerance";
      for (const auto& r : per_level) detail += ' ' + number(r.tolerance);
      detail += ", flags " + estimate::flag_names(first.flags);
      add("bernstein-m" + std::to_string(m), st, detail);
      rep_.bernstein.push_back(std::move(per_level));
    }
    write_file(out_ / "bernstein.csv", csv.str());
  }

  void barriers(const flow::FlowTrajectory& traj) {
    for (const std::string& id : s_.checks.barriers) {
      const barrier::Params p = barrier_params(id, rep_.ledger, s_.checks.ball_r);
      const auto g = barrier::check_grid(traj, s_.ball_center(0), p, kGridBarrierTolerance);
      BarrierRecord b{barrier::kind_name(p), "grid", g.checked, g.skipped, g.sup_relative, g.tolerance, g.pass()};
      rep_.barriers.push_back(b);
      add("barrier-" + id, b.pass ? Status::Pass : Status::Fail,
          "sup relative violation " + number(g.sup_relative) + ", checked " + std::to_string(g.checked) +
              ", skipped " + std::to_string(g.skipped));
    }
    write_barriers();
  }

  void write_barriers() {
    if (rep_.barriers.empty()) return;
    std::ostringstream csv;
    csv << "kind,path,checked,skipped,measure,tolerance,pass\n";
    for (const auto& b : rep_.barriers)
      csv << b.kind << ',' << b.path << ',' << b.checked << ',' << b.skipped << ',' << number(b.measure) << ','
          << number(b.tolerance) << ',' << (b.pass ? "true" : "false") << '\n';
    write_file(out_ / "barriers.csv", csv.str());
  }

  void entropy_checks(const std::vector<std::unique_ptr<flow::FlowTrajectory>>& traj, double T) {
    std::vector<flow::FlowTrajectory> conj;
    for (const auto& t : traj) {
      const auto& last = (*t)[t->size() - 1];
      ScalarField uT = last.u;
      const double lo = uT.min();
      if (!(lo > 0.0)) throw HypothesisViolation("entropy needs u(T) > 0 to seed the conjugate solution");
      const double mass = geom::integrate(last.metric, uT);
      for (std::size_t c = 0; c < uT.size(); ++c) uT[c] /= mass;
      conj.push_back(flow::conjugate_heat_solve(*t, uT));
    }
    const double tau_min = s_.checks.entropy_tau_min;
    rep_.entropy = entropy::entropy_monotonicity_check(conj.back(), T, tau_min);
    write_entropy();

    double worst = 0.0, min_rhs = std::numeric_limits<double>::infinity();
    for (const auto& r : rep_.entropy) {
      worst = std::max(worst, std::abs(r.defect()) / std::max(r.rhs_integral, 1e-300));
      min_rhs = std::min(min_rhs, r.rhs_integral);
    }
    const double drop = entropy::max_entropy_drop(rep_.entropy);
    const bool ok = !rep_.entropy.empty() && min_rhs >= 0.0 && drop == 0.0 && worst <= kEntropyDefectRelative;
    add("entropy-monotonicity", ok ? Status::Pass : Status::Fail,
        "max |dW/dt - rhs| / rhs " + number(worst) + ", min rhs " + number(min_rhs) + ", max W drop " + number(drop));

    if (conj.size() >= 2) {
      std::vector<const flow::FlowTrajectory*> lv;
      for (const auto& c : conj) lv.push_back(&c);
      rep_.conjugate = entropy::conjugate_convergence(lv, T, tau_min);
      std::ostringstream csv;
      csv << "level,h,spacing,sup_residual,order\n";
      std::vector<double> hs, res;
      const auto orders = rep_.conjugate.orders();
      for (std::size_t i = 0; i < rep_.conjugate.levels.size(); ++i) {
        const auto& l = rep_.conjugate.levels[i];
        csv << i << ',' << number(l.h) << ',' << number(l.spacing) << ',' << number(l.sup_residual) << ','
            << (i ? number(orders[i - 1]) : "") << '\n';
        hs.push_back(l.h);
        res.push_back(l.sup_residual);
      }
      write_file(out_ / "conjugate_identity.csv", csv.str());
      write_file(out_ / "conjugate_identity.svg", convergence_svg("|H*P(u) - 2τ|Ric - Hess ln u - g/2τ|²u|, sup norm", hs, res));
      double lowest = std::numeric_limits<double>::infinity();
      for (double o : orders) lowest = std::min(lowest, o);
      add("conjugate-identity", lowest >= kConjugateOrder ? Status::Pass : Status::Fail,
          "lowest observed order " + number(lowest));
    }
  }

  void write_entropy() {
    std::ostringstream csv;
    csv << entropy::csv_header() << '\n';
    for (const auto& r : rep_.entropy) csv << entropy::csv_row(r) << '\n';
    write_file(out_ / "entropy.csv", csv.str());
  }

  void conservation(const flow::FlowTrajectory& traj) {
    // Conjugate data: the forward solution at T, shifted to be >= 1.
    const ScalarField& last = traj[traj.size() - 1].u;
    ScalarField uT = last;
    const double lo = last.min();
    for (std::size_t c = 0; c < uT.size(); ++c) uT[c] += 1.0 - lo;
    const flow::FlowTrajectory conj = flow::conjugate_heat_solve(traj, uT);
    ConservationRecord area{"area", traj[0].metric.area(), 0.0, kConservationTolerance};
    ConservationRecord mass{"conjugate-mass", geom::integrate(conj[0].metric, conj[0].u), 0.0, kConservationTolerance};
    for (std::size_t n = 0; n < traj.size(); ++n) {
      area.max_relative_drift = std::max(area.max_relative_drift, std::abs(traj[n].metric.area() / area.initial - 1.0));
      const double mn = geom::integrate(conj[n].metric, conj[n].u);
      mass.max_relative_drift = std::max(mass.max_relative_drift, std::abs(mn / mass.initial - 1.0));
    }
    std::ostringstream csv;
    csv << "quantity,initial,max_relative_drift,tolerance,pass\n";
    for (const auto* r : {&area, &mass}) {
      csv << r->quantity << ',' << number(r->initial) << ',' << number(r->max_relative_drift) << ','
          << number(r->tolerance) << ',' << (r->pass() ? "true" : "false") << '\n';
      add("conservation-" + r->quantity, r->pass() ? Status::Pass : Status::Fail,
          "max relative drift " + number(r->max_relative_drift));
      rep_.conservation.push_back(*r);
    }
    write_file(out_ / "conservation.csv", csv.str());
  }

  void write_summary() {
    std::ostringstream csv;
    csv << "check,status,detail\n";
    for (const auto& o : rep_.outcomes) csv << o.check << ',' << status_name(o.status) << ',' << text::csv_field(o.detail) << '\n';
    write_file(out_ / "summary.csv", csv.str());
  }

  const Scenario& s_;
  std::filesystem::path out_;
  RunReport rep_;
};

}  // namespace

const char* status_name(Status s) {
  switch (s) {
    case Status::Pass: return "pass";
    case Status::Fail: return "fail";
    case Status::Skipped: return "skipped";
  }
  return "?";
}

bool RunReport::pass() const {
  return std::none_of(outcomes.begin(), outcomes.end(), [](const Outcome& o) { return o.status == Status::Fail; });
}

RunReport run_scenario(const Scenario& scenario, const std::filesystem::path& out_dir) {
  return Runner(scenario, out_dir).run();
}

std::filesystem::path default_output_dir() {
  const char* env = std::getenv("RHL_OUT");
  return env && *env ? std::filesystem::path(env) : std::filesystem::path("rhl-out");
}

std::vector<std::filesystem::path> scenario_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".ini") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::string convergence_svg(const std::string& title, const std::vector<double>& h, const std::vector<double>& residual) {
  constexpr double W = 480, H = 360, left = 70, right = 20, top = 40, bottom = 50;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < h.size() && i < residual.size(); ++i) {
    if (!(h[i] > 0.0 && residual[i] > 0.0)) continue;
    lx.push_back(std::log10(h[i]));
    ly.push_back(std::log10(residual[i]));
  }
  auto escape = [](const std::string& s) {
    std::string o;
    for (char c : s) {
      if (c == '<') o += "&lt;";
      else if (c == '>') o += "&gt;";
      else if (c == '&') o += "&amp;";
      else o += c;
    }
    return o;
  };
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\">" << escape(title) << "</text>\n";
  if (lx.empty()) {
    svg << "<text x=\"" << W / 2 << "\" y=\"" << H / 2 << "\" text-anchor=\"middle\">no positive residuals</text>\n</svg>\n";
    return svg.str();
  }
  double x0 = *std::min_element(lx.begin(), lx.end()) - 0.15, x1 = *std::max_element(lx.begin(), lx.end()) + 0.15;
  double y0 = *std::min_element(ly.begin(), ly.end()) - 0.3, y1 = *std::max_element(ly.begin(), ly.end()) + 0.3;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (W - left - right); };
  auto py = [&](double y) { return H - bottom - (y - y0) / (y1 - y0) * (H - top - bottom); };
  svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << W - left - right << "\" height=\"" << H - top - bottom
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int d = static_cast<int>(std::ceil(y0)); d <= std::floor(y1); ++d)
    svg << "<text x=\"" << left - 6 << "\" y=\"" << number(py(d) + 4) << "\" text-anchor=\"end\">1e" << d << "</text>\n";
  for (std::size_t i = 0; i < lx.size(); ++i)
    svg << "<text x=\"" << number(px(lx[i])) << "\" y=\"" << H - bottom + 16 << "\" text-anchor=\"middle\">"
        << number(std::pow(10.0, lx[i])) << "</text>\n";
  svg << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">h</text>\n";
  // slope-2 reference through the coarsest point
  const double xa = lx.front(), ya = ly.front();
  const double xb = lx.back(), yb = ya + 2.0 * (xb - xa);
  svg << "<line x1=\"" << number(px(xa)) << "\" y1=\"" << number(py(ya)) << "\" x2=\"" << number(px(xb)) << "\" y2=\""
      << number(py(yb)) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  svg << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < lx.size(); ++i) svg << (i ? " " : "") << number(px(lx[i])) << ',' << number(py(ly[i]));
  svg << "\"/>\n";
  for (std::size_t i = 0; i < lx.size(); ++i)
    svg << "<circle cx=\"" << number(px(lx[i])) << "\" cy=\"" << number(py(ly[i])) << "\" r=\"4\" fill=\"steelblue\"/>\n";
  svg << "<text x=\"" << W - right - 4 << "\" y=\"" << top + 14 << "\" text-anchor=\"end\" fill=\"gray\">dashed: slope 2</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace rhl::harness
