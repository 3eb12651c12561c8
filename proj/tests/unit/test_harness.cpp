#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rhl/errors.hpp"
#include "rhl/harness.hpp"
#include "rhl/text.hpp"

namespace {

using namespace rhl;
using namespace rhl::harness;
namespace fs = std::filesystem;

const char* kMinimal = R"([scenario]
name = minimal

[grid]
n = 16

[run]
final_time = 0.2
snapshot_every = 4

[checks]
estimates = gradient
)";

ConfigError config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "config accepted:\n" << text;
  return ConfigError("none");
}

TEST(Config, MinimalValid) {
  const Scenario s = parse_config(kMinimal);
  EXPECT_EQ(s.name, "minimal");
  EXPECT_EQ(s.geometry, Geometry::Torus);
  EXPECT_EQ(s.n, 16);
  EXPECT_EQ(s.checks.estimates, std::vector<std::string>{"gradient"});
  EXPECT_EQ(s.checks.levels, 1);
  EXPECT_GT(s.run_config().dt, 0.0);
  EXPECT_DOUBLE_EQ(s.run_config(1).dt, s.run_config().dt / 4);
  EXPECT_EQ(s.run_config(1).snapshot_every, 8);
}

TEST(Config, UnknownKeyNamedWithLine) {
  const ConfigError e = config_error(std::string(kMinimal) + "foo = 1\n");
  EXPECT_EQ(e.field(), "foo");
  EXPECT_EQ(e.line(), 13);
  EXPECT_NE(std::string(e.what()).find("foo"), std::string::npos);
}

TEST(Config, UnknownSection) {
  const ConfigError e = config_error(std::string(kMinimal) + "[extra]\nx = 1\n");
  EXPECT_EQ(e.field(), "extra");
  EXPECT_EQ(e.line(), 13);
}

TEST(Config, CflViolationNamesDt) {
  std::string text = kMinimal;
  text.replace(text.find("snapshot_every"), 0, "dt = 1.0\n");
  const ConfigError e = config_error(text);
  EXPECT_EQ(e.field(), "dt");
  EXPECT_EQ(e.line(), 9);
  EXPECT_NE(std::string(e.what()).find("CFL"), std::string::npos);
}

TEST(Config, ValidationErrorsNameTheField) {
  auto field_of = [](const std::string& from, const std::string& to) {
    std::string text = kMinimal;
    text.replace(text.find(from), from.size(), to);
    return config_error(text).field();
  };
  EXPECT_EQ(field_of("estimates = gradient", "estimates = gradient, slope"), "estimates");
  EXPECT_EQ(field_of("estimates = gradient", "levels = 0"), "levels");
  EXPECT_EQ(field_of("n = 16", "n = sixteen"), "n");
  EXPECT_EQ(field_of("final_time = 0.2", "final_time = -1"), "final_time");
  EXPECT_EQ(field_of("estimates = gradient", "barriers = phi2"), "barriers");
  EXPECT_EQ(field_of("estimates = gradient", "entropy = yes"), "entropy");
  EXPECT_EQ(field_of("name = minimal", "name = two words"), "name");
  EXPECT_EQ(config_error(std::string(kMinimal) + "[ledger]\nA9 = 1\n").field(), "A9");
}

TEST(Config, SyntaxErrorCarriesLine) {
  const ConfigError e = config_error("[scenario]\nname = x\n[grid\n");
  EXPECT_EQ(e.line(), 3);
}

TEST(Config, LedgerOverridesAndAlpha) {
  const Scenario s = parse_config(std::string(kMinimal) + "[ledger]\nA1 = 0.01\nalpha1 = 30\n");
  EXPECT_EQ(s.ledger.overrides.at("A1"), 0.01);
  ASSERT_EQ(s.ledger.alpha.size(), 3u);
  EXPECT_EQ(s.ledger.alpha[0], 30.0);
  EXPECT_FALSE(constants::ConstantLedger(s.ledger).violations().empty());
}

TEST(Config, MissingFile) {
  EXPECT_THROW(load_config("/nonexistent/missing.ini"), ConfigError);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rhl-test-" + name);
  fs::remove_all(p);
  return p;
}

const char* kSmallRun = R"([scenario]
name = small

[grid]
n = 16

[initial]
f_amplitude = 0.1
u_offset = 1
u_amplitude = 0.5

[run]
final_time = 0.25
snapshot_every = 2

[checks]
estimates = gradient, hessian, zhang, laplacian
a = 1.5
identities = 1
bernstein = 1
barriers = psi1
entropy = true
entropy_tau_min = 0.05
conservation = true
levels = 2
)";

TEST(Harness, DeterministicOutputs) {
  const Scenario s = parse_config(kSmallRun);
  const fs::path a = scratch("det-a"), b = scratch("det-b");
  run_scenario(s, a);
  run_scenario(s, b);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    ++files;
    EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path().filename();
  }
  EXPECT_GE(files, 10u);
}

// Minimal RFC 4180 reader: quoted fields, doubled quotes.
std::vector<std::vector<std::string>> read_csv(const std::string& body) {
  std::vector<std::vector<std::string>> rows(1);
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (quoted) {
      if (c == '"' && i + 1 < body.size() && body[i + 1] == '"') field += '"', ++i;
      else if (c == '"') quoted = false;
      else field += c;
    } else if (c == '"') quoted = true;
    else if (c == ',') rows.back().push_back(field), field.clear();
    else if (c == '\n') {
      rows.back().push_back(field), field.clear();
      rows.emplace_back();
    } else field += c;
  }
  if (rows.back().empty()) rows.pop_back();
  return rows;
}

TEST(Harness, CsvRoundTrip) {
  const fs::path out = scratch("csv");
  run_scenario(parse_config(kSmallRun), out);
  std::size_t numbers = 0;
  for (const auto& e : fs::directory_iterator(out)) {
    if (e.path().extension() != ".csv") continue;
    const auto rows = read_csv(slurp(e.path()));
    ASSERT_GE(rows.size(), 2u) << e.path();
    for (const auto& row : rows) {
      ASSERT_EQ(row.size(), rows[0].size()) << e.path();
      for (const auto& f : row) {
        char* end = nullptr;
        const double v = std::strtod(f.c_str(), &end);
        if (f.empty() || *end != '\0') continue;
        ++numbers;
        if (f.find_first_not_of("-0123456789") == std::string::npos) continue;  // integer column
        EXPECT_EQ(text::number(v), f) << e.path();
      }
    }
  }
  EXPECT_GT(numbers, 100u);
}

TEST(Harness, SummaryMatchesOutcomes) {
  const fs::path out = scratch("summary");
  const RunReport rep = run_scenario(parse_config(kSmallRun), out);
  const auto rows = read_csv(slurp(out / "summary.csv"));
  ASSERT_EQ(rows.size(), rep.outcomes.size() + 1);
  for (std::size_t i = 0; i < rep.outcomes.size(); ++i) {
    EXPECT_EQ(rows[i + 1][0], rep.outcomes[i].check);
    EXPECT_EQ(rows[i + 1][1], status_name(rep.outcomes[i].status));
    EXPECT_EQ(rows[i + 1][2], rep.outcomes[i].detail);
  }
}

TEST(Harness, CorruptedLedgerFails) {
  const fs::path out = scratch("ledger");
  const RunReport rep = run_scenario(parse_config(std::string(kMinimal) + "[ledger]\nA1 = 0.01\n"), out);
  EXPECT_FALSE(rep.pass());
  ASSERT_FALSE(rep.outcomes.empty());
  EXPECT_EQ(rep.outcomes[0].check, "ledger");
  EXPECT_EQ(rep.outcomes[0].status, Status::Fail);
  EXPECT_NE(slurp(out / "ledger.csv").find("A1,1,0.01"), std::string::npos);
}

TEST(Harness, SphereScenario) {
  const RunReport rep = run_scenario(
      parse_config("[scenario]\nname = s\ngeometry = sphere\n[checks]\nbarriers = psi1, phi2\nentropy = true\nball_r = 0.5\n"),
      scratch("sphere"));
  EXPECT_TRUE(rep.pass());
  ASSERT_EQ(rep.barriers.size(), 2u);
  EXPECT_EQ(rep.barriers[0].checked, 1000u);
  ASSERT_EQ(rep.entropy.size(), 9u);
  for (const auto& r : rep.entropy) EXPECT_NEAR(r.W, std::log(2.0) - 1.0, 1e-12);
}

TEST(Harness, VerifyConstantsAllPass) {
  const auto out = verify_constants();
  EXPECT_GE(out.size(), 6u);
  for (const auto& o : out) EXPECT_EQ(o.status, Status::Pass) << o.check << ": " << o.detail;
}

TEST(Harness, DefaultOutputDir) {
  ::setenv("RHL_OUT", "/tmp/somewhere", 1);
  EXPECT_EQ(default_output_dir(), fs::path("/tmp/somewhere"));
  ::unsetenv("RHL_OUT");
  EXPECT_EQ(default_output_dir(), fs::path("rhl-out"));
}

TEST(Harness, ConvergenceSvg) {
  const std::string svg = convergence_svg("t", {0.1, 0.05}, {1e-3, 2.5e-4});
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

}  // namespace
