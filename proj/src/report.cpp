#include "densinf/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace densinf {

Json number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

double number_from(const Json& j) {
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw std::invalid_argument("not a number: " + s);
  }
  return j.get<double>();
}

namespace {

Json vec(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

std::string cell(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw OutputError("cannot write " + p.string());
  out << content;
  if (!out) throw OutputError("write failed for " + p.string());
}

}  // namespace

Json to_json(const DensityCurve& c) {
  Json j;
  j["t"] = number(c.t);
  j["method"] = to_string(c.method);
  Json s = Json::array();
  for (const auto& p : c.samples) {
    s.push_back({{"r", number(p.r)},
                 {"value", number(p.value)},
                 {"stderr", number(p.stderr_)},
                 {"reliable", p.reliable}});
  }
  j["samples"] = std::move(s);
  return j;
}

Json to_json(const DensityEstimate& e) {
  return {{"theta", number(e.theta)},
          {"c", number(e.c)},
          {"alpha", number(e.alpha)},
          {"fit_residual", number(e.fit_residual)},
          {"n_points_used", e.n_points_used},
          {"stderr", number(e.stderr_)},
          {"flagged", e.flagged},
          {"note", e.note}};
}

Json to_json(const KinfCandidate& c) {
  Json w = Json::array();
  for (const auto& x : c.witnesses) {
    w.push_back({{"r", number(x.r)}, {"x", vec(x.x)}, {"f_value", number(x.f_value)}, {"nu", number(x.nu)}});
  }
  return {{"value", number(c.value)},
          {"bin_width", number(c.bin_width)},
          {"decay_slope", number(c.decay_slope)},
          {"final_nu", number(c.final_nu)},
          {"n_witnesses", c.witnesses.size()},
          {"witnesses", std::move(w)}};
}

Json to_json(const KinfResult& r) {
  Json c = Json::array();
  for (const auto& k : r.candidates) c.push_back(to_json(k));
  return {{"candidates", std::move(c)},
          {"envelope_slope", number(r.envelope_slope)},
          {"radii", vec(r.envelope.radii)},
          {"bin_edges", vec(r.envelope.bin_edges)},
          {"bin_slopes", vec(r.bin_slopes)}};
}

Json to_json(const SigmaEnvelope& e) {
  return {{"t_grid", vec(e.t_grid)},   {"sigma1", vec(e.sigma1)},
          {"sigma2", vec(e.sigma2)},   {"eps1", vec(e.eps1_nodes)},
          {"eps2", vec(e.eps2_nodes)}, {"dropped", vec(e.dropped)}};
}

Json to_json(const LipschitzReport& r) {
  Json theta = Json::array();
  for (const auto& e : r.theta) theta.push_back(to_json(e));
  Json runs = Json::array();
  for (const auto& s : r.max_modulus_per_interval) {
    runs.push_back({{"lo", number(s.lo)}, {"hi", number(s.hi)}, {"max_modulus", number(s.max_modulus)}});
  }
  Json disc = Json::array();
  for (const auto& d : r.discontinuities) {
    disc.push_back({{"t_location", number(d.t_location)},
                    {"cell_lo", number(d.cell_lo)},
                    {"cell_hi", number(d.cell_hi)},
                    {"jump_size", number(d.jump_size)},
                    {"nearest_candidate", d.nearest_candidate ? number(*d.nearest_candidate) : Json()}});
  }
  return {{"t_grid", vec(r.t_grid)},
          {"theta", std::move(theta)},
          {"moduli", vec(r.moduli)},
          {"max_modulus_per_interval", std::move(runs)},
          {"discontinuities", std::move(disc)},
          {"jump_threshold", number(r.jump_threshold)},
          {"verdict", r.verdict}};
}

Json to_json(const RugosityReport& r) {
  Json per = Json::array();
  for (const auto& s : r.per_radius) {
    per.push_back({{"r", number(s.r)}, {"pairs", s.pairs}, {"max_ratio", number(s.max_ratio)}});
  }
  double worst_conformal = 0.0, worst_gap = std::numeric_limits<double>::infinity();
  for (const auto& p : r.pairs) {
    worst_conformal = std::max(worst_conformal, p.conformal_product);
    worst_gap = std::min(worst_gap, p.distance - norm(p.u));
  }
  return {{"interval", {number(r.a), number(r.b)}},
          {"refused", r.refused},
          {"diagnostic", r.diagnostic},
          {"eps1", number(r.eps1)},
          {"n_pairs", r.pairs.size()},
          {"max_ratio", number(r.max_ratio)},
          {"fitted_C", number(r.fitted_C)},
          {"max_conformal_product", number(worst_conformal)},
          {"min_distance_minus_u_norm", number(r.pairs.empty() ? 0.0 : worst_gap)},
          {"per_radius", std::move(per)}};
}

std::string format_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + cell(row[i]);
    out += '\n';
  }
  return out;
}

std::string format_dat(const Table& t) {
  std::string out = "#";
  for (const auto& c : t.columns) out += " " + c;
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? " " : "") + cell(row[i]);
    out += '\n';
  }
  return out;
}

Table parse_csv(const std::string& name, const std::string& text) {
  Table t{name, {}, {}};
  std::istringstream in(text);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string f;
    std::vector<double> row;
    while (std::getline(fields, f, ',')) {
      if (header) {
        t.columns.push_back(f);
      } else {
        row.push_back(std::stod(f));  // accepts inf, -inf and nan
      }
    }
    if (!header) t.rows.push_back(std::move(row));
    header = false;
  }
  return t;
}

Json RunReport::to_json() const {
  return {{"artifact", "densinf"},
          {"version", version},
          {"subcommand", subcommand},
          {"status", status},
          {"error", error},
          {"config", config},
          {"stages", stages}};
}

RunReport RunReport::from_json(const Json& j) {
  RunReport r;
  r.version = j.at("version").get<std::string>();
  r.subcommand = j.at("subcommand").get<std::string>();
  r.status = j.at("status").get<std::string>();
  r.error = j.at("error").get<std::string>();
  r.config = j.at("config");
  r.stages = j.at("stages");
  return r;
}

void emit_report(const RunReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  for (const auto& sub : {dir, dir / "tables", dir / "plots"}) {
    std::filesystem::create_directories(sub, ec);
    if (ec) throw OutputError("cannot create " + sub.string() + ": " + ec.message());
  }
  write_file(dir / "report.json", report.to_json().dump(2) + "\n");
  Json timings = Json::object();
  for (const auto& [stage, secs] : report.timings) timings[stage] = secs;
  write_file(dir / "timings.json", timings.dump(2) + "\n");
  for (const auto& t : report.tables) {
    write_file(dir / "tables" / (t.name + ".csv"), format_csv(t));
    write_file(dir / "plots" / (t.name + ".dat"), format_dat(t));
  }
}

}  // namespace densinf
