#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "densinf/run.hpp"

using namespace densinf;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("densinf_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("parse_run_config: valid density config") {
  const Json j = Json::parse(R"({"polynomial": "x*y", "seed": 5, "density": {"t": 1}})");
  const RunConfig c = parse_run_config(j, "density");
  CHECK(c.seed == 5);
  CHECK(c.density.t_values == std::vector<double>{1.0});
  CHECK(c.density.profile.method == DensityMethod::kSphereCount);
  CHECK(parse_run_config(j, "density", 9).seed == 9);
}

TEST_CASE("parse_run_config: radii and grids from generators") {
  const Json j = Json::parse(R"({"polynomial": "x + x^2*y", "seed": 1,
    "kinf": {"radii": {"r0": 4, "count": 5}},
    "lipschitz": {"t_grid": {"lo": -0.2, "hi": 0.2, "count": 9}}})");
  const RunConfig c = parse_run_config(j, "lipschitz");
  CHECK(c.kinf.radii == std::vector<double>{4, 8, 16, 32, 64});
  REQUIRE(c.lipschitz.t_grid.size() == 9);
  CHECK(c.lipschitz.t_grid[4] == 0.0);
  CHECK(c.lipschitz.t_grid.front() == -0.2);
  CHECK(c.lipschitz.t_grid.back() == 0.2);
}

TEST_CASE("parse_run_config: validation errors") {
  auto bad = [](const char* text, const char* sub, const char* needle) {
    CAPTURE(text);
    try {
      parse_run_config(Json::parse(text), sub);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  bad(R"({"polynomial": "x/", "seed": 1, "density": {"t": 1}})", "density", "parse error");
  bad(R"({"polynomial": "x", "density": {"t": 1}})", "density", "seed");
  bad(R"({"seed": 1, "density": {"t": 1}})", "density", "polynomial");
  bad(R"({"polynomial": "x", "seed": 1})", "density", "density");
  bad(R"({"polynomial": "x", "seed": 1, "density": {"t": 1, "method": "bogus"}})", "density", "method");
  bad(R"({"polynomial": "x", "seed": -3, "density": {"t": 1}})", "density", "seed");
  bad(R"({"polynomial": "x", "seed": 1, "rugosity": {"interval": [2, 1]}})", "rugosity", "interval");
  bad(R"({"polynomial": "x", "seed": 1, "lipschitz": {"t_grid": [0, 1]}})", "lipschitz", "t_grid");
  bad(R"({"polynomial": "x", "seed": 1, "density": {"t": 1}})", "nonsense", "subcommand");
}

TEST_CASE("run: density of xy at t = 1 is 2") {
  const RunConfig c = parse_run_config(
      Json::parse(R"({"polynomial": "x*y", "seed": 1, "density": {"t": 1}})"), "density");
  const RunReport r = run(c);
  CHECK(r.status == "ok");
  const Json j = r.to_json();
  CHECK(j["stages"]["density"][0]["estimate"]["theta"].get<double>() == 2.0);
  CHECK(j["artifact"].is_string());
  CHECK(j["version"] == artifact_version());
}

TEST_CASE("run: kinf of Broughton has one candidate near 0") {
  const RunConfig c = parse_run_config(Json::parse(R"({"polynomial": "x + x^2*y", "seed": 1})"), "kinf");
  const RunReport r = run(c);
  CHECK(r.status == "ok");
  const Json& cands = r.stages["kinf"]["candidates"];
  REQUIRE(cands.size() == 1);
  CHECK(std::abs(cands[0]["value"].get<double>()) < cands[0]["bin_width"].get<double>());
}

TEST_CASE("run: a failing stage keeps the earlier stages") {
  RunConfig c = parse_run_config(
      Json::parse(R"({"polynomial": "x*y", "seed": 1, "kinf": {"radii": [8, 16, 32, 64]},
                      "rugosity": {"interval": [0.5, 2]}})"),
      "rugosity");
  c.rugosity.radii = {4, 2};  // bypasses config validation to force a throw inside the stage
  const RunReport r = run(c);
  CHECK(r.status == "failed");
  CHECK(r.error.rfind("rugosity:", 0) == 0);
  CHECK(r.stages.contains("kinf"));
  CHECK_FALSE(r.stages.contains("rugosity"));
}

TEST_CASE("emit_report: byte-identical, round trip, csv and dat agree") {
  const RunConfig c = parse_run_config(
      Json::parse(R"({"polynomial": "x*y", "seed": 2, "density": {"t": [-1, 1]}})"), "density");
  const RunReport r = run(c);
  const fs::path a = scratch("emit_a"), b = scratch("emit_b");
  emit_report(r, a);
  emit_report(r, b);
  for (const char* f : {"report.json", "tables/density_curves.csv", "plots/density_curves.dat",
                        "tables/density_estimates.csv"}) {
    CAPTURE(f);
    CHECK(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(fs::exists(a / "timings.json"));

  const RunReport back = RunReport::from_json(Json::parse(slurp(a / "report.json")));
  CHECK(back.to_json() == r.to_json());
  CHECK(back.to_json().dump(2) == r.to_json().dump(2));

  for (const Table& t : r.tables) {
    CAPTURE(t.name);
    const Table parsed = parse_csv(t.name, slurp(a / "tables" / (t.name + ".csv")));
    CHECK(parsed == t);
    std::istringstream dat(slurp(a / "plots" / (t.name + ".dat")));
    std::string line;
    std::getline(dat, line);
    std::istringstream header(line.substr(2));
    std::vector<std::string> cols;
    for (std::string w; header >> w;) cols.push_back(w);
    CHECK(cols == t.columns);
    std::size_t rows = 0;
    while (std::getline(dat, line)) {
      std::istringstream cells(line);
      std::size_t k = 0;
      for (std::string cell; cells >> cell;) {
        const double v = std::stod(cell);
        CHECK((v == t.rows[rows][k] || (std::isnan(v) && std::isnan(t.rows[rows][k]))));
        ++k;
      }
      CHECK(k == t.columns.size());
      ++rows;
    }
    CHECK(rows == t.rows.size());
  }
}

TEST_CASE("number: non-finite values survive the round trip as strings") {
  CHECK(number(INFINITY) == "inf");
  CHECK(number(-INFINITY) == "-inf");
  CHECK(number(NAN) == "nan");
  CHECK(std::isinf(number_from(number(INFINITY))));
  CHECK(std::isnan(number_from(number(NAN))));
  CHECK(number_from(number(0.1)) == 0.1);
}

TEST_CASE("emit_report: unwritable path throws OutputError") {
  const fs::path file = scratch("blocker");
  std::ofstream(file) << "x";
  RunReport r;
  CHECK_THROWS_AS(emit_report(r, file / "sub"), OutputError);
  fs::remove(file);
}

TEST_CASE("run: a refused rugosity interval fails but keeps the diagnostic ratios") {
  const RunConfig c = parse_run_config(
      Json::parse(R"({"polynomial": "x + x^2*y", "seed": 3,
                      "rugosity": {"interval": [0.05, 0.15], "pairs_per_radius": 50}})"),
      "rugosity");
  const RunReport r = run(c);
  CHECK(r.status == "failed");
  CHECK(r.error.find("refused") != std::string::npos);
  CHECK(r.stages["rugosity"]["refused"] == true);
  CHECK(r.stages["rugosity"]["n_pairs"].get<std::size_t>() > 0);
}
