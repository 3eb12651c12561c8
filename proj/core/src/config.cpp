#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "rhl/errors.hpp"
#include "rhl/geometry.hpp"
#include "rhl/harness.hpp"

namespace rhl::harness {
namespace {

namespace pt = boost::property_tree;

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Line of `[section]` (key empty) or of `key` inside it; 0 if absent.
int line_of(const std::string& text, const std::string& section, const std::string& key) {
  std::istringstream in(text);
  std::string line, current;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string s = trim(line);
    if (s.empty() || s[0] == ';' || s[0] == '#') continue;
    if (s.front() == '[' && s.back() == ']') {
      current = trim(s.substr(1, s.size() - 2));
      if (key.empty() && current == section) return number;
      continue;
    }
    if (!key.empty() && current == section) {
      const auto eq = s.find('=');
      if (eq != std::string::npos && trim(s.substr(0, eq)) == key) return number;
    }
  }
  return 0;
}

std::string unquote(std::string v) {
  v = trim(v);
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
  return v;
}

class Reader {
 public:
  Reader(const pt::ptree& tree, const std::string& text) : tree_(tree), text_(text) {}

  bool has(const std::string& section, const std::string& key) const {
    const auto s = tree_.get_child_optional(section);
    return s && s->find(key) != s->not_found();
  }

  std::string string(const std::string& section, const std::string& key) const {
    return unquote(tree_.get_child(section).get<std::string>(key));
  }

  double real(const std::string& section, const std::string& key, double fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = string(section, key);
    try {
      std::size_t used = 0;
      const double x = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw error(section, key, "expected a number, got '" + v + "'");
    }
  }

  int integer(const std::string& section, const std::string& key, int fallback) const {
    const double x = real(section, key, fallback);
    if (x != std::floor(x) || std::abs(x) > 1e9) throw error(section, key, "expected an integer");
    return static_cast<int>(x);
  }

  bool boolean(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = string(section, key);
    if (v == "true") return true;
    if (v == "false") return false;
    throw error(section, key, "expected true or false, got '" + v + "'");
  }

  std::vector<std::string> list(const std::string& section, const std::string& key) const {
    std::vector<std::string> out;
    if (!has(section, key)) return out;
    std::istringstream in(string(section, key));
    std::string item;
    while (std::getline(in, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  ConfigError error(const std::string& section, const std::string& key, const std::string& what) const {
    return ConfigError(section + "." + key + ": " + what, key, line_of(text_, section, key));
  }

 private:
  const pt::ptree& tree_;
  const std::string& text_;
};

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"scenario", {"name", "geometry", "expect"}},
      {"grid", {"n", "length"}},
      {"initial", {"f_amplitude", "f_kx", "f_ky", "u_offset", "u_amplitude", "u_kx", "u_ky", "u_phase"}},
      {"run", {"dt", "dt_fraction", "final_time", "snapshot_every"}},
      {"checks",
       {"estimates", "a", "ball_x", "ball_y", "ball_r", "shi_constant", "identities", "bernstein", "barriers",
        "entropy", "entropy_tau_min", "conservation", "levels"}},
      {"ledger", {}},  // kmax, curvature_constant, alphaK and ledger symbols; checked separately
  };
  return s;
}

const std::set<std::string> kEstimateIds = {"gradient",  "hessian", "higher3", "gradient-uniform", "hessian-uniform",
                                            "shi1",      "shi2",    "zhang",   "laplacian"};

std::set<std::string> ledger_keys(int kmax) {
  constants::LedgerOptions o;
  o.kmax = kmax;
  std::set<std::string> keys = {"kmax", "curvature_constant"};
  const constants::ConstantLedger ledger(o);
  for (const auto& e : ledger.entries()) keys.insert(e.symbol);
  for (int k = 1; k <= kmax; ++k) keys.insert("alpha" + std::to_string(k));
  return keys;
}

int parse_order(const Reader& r, const std::string& key, const std::string& item, const std::string& prefix) {
  std::string digits = item;
  if (!prefix.empty()) {
    if (item.rfind(prefix, 0) != 0) throw r.error("checks", key, "unknown entry '" + item + "'");
    digits = item.substr(prefix.size());
  }
  if (digits.size() != 1 || digits[0] < '1' || digits[0] > '9') throw r.error("checks", key, "bad order '" + item + "'");
  return digits[0] - '0';
}

}  // namespace

Scenario parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(e.message(), {}, static_cast<int>(e.line()));
  }

  for (const auto& [section, body] : tree) {
    const auto it = schema().find(section);
    if (it == schema().end()) throw ConfigError("unknown section [" + section + "]", section, line_of(text, section, {}));
    if (body.empty() && !body.data().empty())
      throw ConfigError("key '" + section + "' outside a section", section, line_of(text, {}, section));
    if (section == "ledger") continue;
    for (const auto& kv : body)
      if (!it->second.count(kv.first))
        throw ConfigError("unknown key '" + kv.first + "' in [" + section + "]", kv.first,
                          line_of(text, section, kv.first));
  }

  const Reader r(tree, text);
  Scenario s;
  s.source = text;

  if (!r.has("scenario", "name")) throw ConfigError("missing required key scenario.name", "name");
  s.name = r.string("scenario", "name");
  if (s.name.empty() || s.name.find_first_of("/\\ ") != std::string::npos)
    throw r.error("scenario", "name", "must be a non-empty name without spaces or slashes");
  if (r.has("scenario", "geometry")) {
    const std::string g = r.string("scenario", "geometry");
    if (g == "torus") s.geometry = Geometry::Torus;
    else if (g == "sphere") s.geometry = Geometry::Sphere;
    else throw r.error("scenario", "geometry", "expected torus or sphere");
  }
  if (r.has("scenario", "expect")) {
    const std::string e = r.string("scenario", "expect");
    if (e == "pass") s.expect = Expectation::Pass;
    else if (e == "check-failure") s.expect = Expectation::CheckFailure;
    else throw r.error("scenario", "expect", "expected pass or check-failure");
  }

  const bool sphere = s.geometry == Geometry::Sphere;
  s.n = r.integer("grid", "n", sphere ? 2 : 64);
  if (sphere ? s.n < 2 : s.n < 8) throw r.error("grid", "n", sphere ? "sphere dimension must be >= 2" : "need n >= 8");
  s.length = r.real("grid", "length", 2.0 * std::numbers::pi);
  if (!(s.length > 0.0)) throw r.error("grid", "length", "must be positive");

  InitialData& init = s.initial;
  init.f_amplitude = r.real("initial", "f_amplitude", init.f_amplitude);
  init.f_kx = r.real("initial", "f_kx", init.f_kx);
  init.f_ky = r.real("initial", "f_ky", init.f_ky);
  init.u_offset = r.real("initial", "u_offset", init.u_offset);
  init.u_amplitude = r.real("initial", "u_amplitude", init.u_amplitude);
  init.u_kx = r.real("initial", "u_kx", init.u_kx);
  init.u_ky = r.real("initial", "u_ky", init.u_ky);
  init.u_phase = r.real("initial", "u_phase", init.u_phase);

  if (!sphere && !r.has("run", "final_time")) throw ConfigError("missing required key run.final_time", "final_time");
  s.final_time = r.real("run", "final_time", 0.0);
  if (!sphere && !(s.final_time > 0.0)) throw r.error("run", "final_time", "must be positive");
  s.snapshot_every = r.integer("run", "snapshot_every", 1);
  if (s.snapshot_every < 1) throw r.error("run", "snapshot_every", "must be >= 1");
  s.dt_fraction = r.real("run", "dt_fraction", 1.0);
  if (!(s.dt_fraction > 0.0 && s.dt_fraction <= 1.0)) throw r.error("run", "dt_fraction", "must lie in (0, 1]");
  s.dt = r.real("run", "dt", 0.0);
  if (r.has("run", "dt")) {
    if (!(s.dt > 0.0)) throw r.error("run", "dt", "must be positive");
    if (!sphere) {
      const double limit = flow::cfl_limit(ConformalMetric(s.run_config().f0));
      if (s.dt > limit)
        throw r.error("run", "dt", "violates the CFL limit " + std::to_string(limit) + " for this grid and metric");
    }
  }

  Checks& c = s.checks;
  for (const std::string& id : r.list("checks", "estimates")) {
    if (!kEstimateIds.count(id)) throw r.error("checks", "estimates", "unknown estimate '" + id + "'");
    c.estimates.push_back(id);
  }
  c.a = r.real("checks", "a", 1.0);
  if (!(c.a > 0.0)) throw r.error("checks", "a", "must be positive");
  c.ball_x = r.real("checks", "ball_x", s.length / 2);
  c.ball_y = r.real("checks", "ball_y", s.length / 2);
  c.ball_r = r.real("checks", "ball_r", 1.0);
  if (!(c.ball_r > 0.0)) throw r.error("checks", "ball_r", "must be positive");
  c.shi_constant = r.real("checks", "shi_constant", 0.0);
  for (const std::string& k : r.list("checks", "identities")) {
    const int order = parse_order(r, "identities", k, "");
    if (order > geom::kDefaultMaxRank - 1) throw r.error("checks", "identities", "order exceeds K_max - 1");
    c.identities.push_back(order);
  }
  const int kmax = r.integer("ledger", "kmax", 3);
  for (const std::string& m : r.list("checks", "bernstein")) {
    const int order = parse_order(r, "bernstein", m, "");
    if (order > kmax) throw r.error("checks", "bernstein", "order exceeds ledger kmax");
    c.bernstein.push_back(order);
  }
  for (const std::string& b : r.list("checks", "barriers")) {
    const bool psi = b.rfind("psi", 0) == 0;
    const int order = parse_order(r, "barriers", b, psi ? "psi" : "phi");
    if (!sphere && order != 1) throw r.error("checks", "barriers", "grid barriers support order 1 only");
    if (order > kmax) throw r.error("checks", "barriers", "order exceeds ledger kmax");
    c.barriers.push_back(b);
  }
  c.entropy = r.boolean("checks", "entropy", false);
  c.entropy_tau_min = r.real("checks", "entropy_tau_min", 0.0);
  c.conservation = r.boolean("checks", "conservation", false);
  c.levels = r.integer("checks", "levels", 1);
  if (c.levels < 1 || c.levels > 4) throw r.error("checks", "levels", "must lie in [1, 4]");

  constants::LedgerOptions& L = s.ledger;
  L.kmax = kmax;
  if (kmax < 1 || kmax > geom::kDefaultMaxRank - 1) throw r.error("ledger", "kmax", "must lie in [1, K_max - 1]");
  if (const auto ledger = tree.get_child_optional("ledger")) {
    const std::set<std::string> allowed = ledger_keys(kmax);
    for (const auto& kv : *ledger) {
      const std::string& key = kv.first;
      if (!allowed.count(key))
        throw ConfigError("unknown key '" + key + "' in [ledger]", key, line_of(text, "ledger", key));
      if (key == "kmax") continue;
      const double v = r.real("ledger", key, 0.0);
      if (key == "curvature_constant") L.curvature_constant = v;
      else if (key.rfind("alpha", 0) == 0) {
        const int k = key.back() - '0';
        if (L.alpha.empty()) {
          const constants::ConstantLedger defaults(L);
          for (int j = 1; j <= kmax; ++j) L.alpha.push_back(defaults.alpha(j));
        }
        L.alpha[static_cast<std::size_t>(k - 1)] = v;
      } else {
        L.overrides[key] = v;
      }
    }
  }
  return s;
}

Scenario load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

GridSpec Scenario::grid(int level) const {
  const int m = n << level;
  return GridSpec(m, m, length, length);
}

namespace {

ScalarField initial_f(const InitialData& d, const GridSpec& s) {
  return ScalarField::sample(s, [&](double x, double y) { return d.f_amplitude * std::sin(d.f_kx * x) * std::sin(d.f_ky * y); });
}

ScalarField initial_u(const InitialData& d, const GridSpec& s) {
  return ScalarField::sample(
      s, [&](double x, double y) { return d.u_offset + d.u_amplitude * std::sin(d.u_kx * x + d.u_ky * y + d.u_phase); });
}

}  // namespace

flow::RunConfig Scenario::run_config(int level) const {
  if (geometry != Geometry::Torus) throw InvalidArgument("scenario " + name + " has no grid run");
  const GridSpec s = grid(level);
  flow::RunConfig c(initial_f(initial, s), initial_u(initial, s));
  c.scenario = name;
  c.final_time = final_time;
  c.snapshot_every = snapshot_every << level;
  double base = dt > 0.0 ? dt : dt_fraction * flow::cfl_limit(ConformalMetric(initial_f(initial, grid(0))));
  // Whole number of level-0 snapshot intervals, so refined levels share every coarse snapshot time.
  const double intervals = std::ceil(final_time / (base * snapshot_every) * (1.0 - 1e-12));
  base = final_time / (std::max(1.0, intervals) * snapshot_every);
  c.dt = base / std::pow(4.0, level);
  return c;
}

GridIndex Scenario::ball_center(int level) const {
  const GridSpec s = grid(level);
  const int i = static_cast<int>(std::lround(checks.ball_x / s.hx()));
  const int j = static_cast<int>(std::lround(checks.ball_y / s.hy()));
  return {s.wrap_i(i), s.wrap_j(j)};
}

}  // namespace rhl::harness
