#include "densinf/run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>

namespace densinf {

std::string artifact_version() { return DENSINF_VERSION; }

namespace {

double get_number(const Json& j, const std::string& what) {
  if (!j.is_number()) throw ConfigError(what + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(what + ": must be finite");
  return v;
}

std::size_t get_count(const Json& j, const std::string& what) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) throw ConfigError(what + ": expected an integer");
  const auto v = j.get<long long>();
  if (v < 0) throw ConfigError(what + ": must be non-negative");
  return static_cast<std::size_t>(v);
}

std::vector<double> get_list(const Json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + ": expected a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_number(j[i], what + "[" + std::to_string(i) + "]"));
  return out;
}

void require_increasing(const std::vector<double>& v, const std::string& what) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) throw ConfigError(what + ": must be strictly increasing");
  }
}

std::vector<double> get_radii(const Json& j, const std::string& what) {
  std::vector<double> r;
  if (j.is_object()) {
    const double r0 = get_number(j.value("r0", Json(8.0)), what + ".r0");
    const std::size_t count = get_count(j.value("count", Json(6)), what + ".count");
    const double ratio = get_number(j.value("ratio", Json(2.0)), what + ".ratio");
    if (!(r0 > 0.0) || !(ratio > 1.0)) throw ConfigError(what + ": need r0 > 0 and ratio > 1");
    r = geometric_radii(r0, count, ratio);
  } else {
    r = get_list(j, what);
  }
  if (r.empty()) throw ConfigError(what + ": empty radius schedule");
  if (!(r.front() > 0.0)) throw ConfigError(what + ": radii must be positive");
  require_increasing(r, what);
  return r;
}

std::vector<double> get_grid(const Json& j, const std::string& what) {
  std::vector<double> t;
  if (j.is_object()) {
    const double lo = get_number(j.at("lo"), what + ".lo");
    const double hi = get_number(j.at("hi"), what + ".hi");
    const std::size_t count = get_count(j.at("count"), what + ".count");
    if (count < 2 || !(hi > lo)) throw ConfigError(what + ": need count >= 2 and hi > lo");
    for (std::size_t i = 0; i < count; ++i) {
      // integer numerators keep symmetric grids exact at 0
      t.push_back((lo * static_cast<double>(count - 1 - i) + hi * static_cast<double>(i)) /
                  static_cast<double>(count - 1));
    }
  } else {
    t = get_list(j, what);
  }
  require_increasing(t, what);
  return t;
}

void read_profile(const Json& b, const std::string& what, std::size_t nvars, ProfileConfig& p) {
  p.method = nvars == 2 ? DensityMethod::kSphereCount : DensityMethod::kSphereCoarea;
  if (b.contains("method")) {
    if (!b["method"].is_string()) throw ConfigError(what + ".method: expected a string");
    try {
      p.method = parse_density_method(b["method"].get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(what + ".method: " + e.what());
    }
  }
  if (nvars != 2 && p.method == DensityMethod::kSphereCount) {
    throw ConfigError(what + ".method: sphere_count needs nvars = 2");
  }
  if (b.contains("radii")) p.radii = get_radii(b["radii"], what + ".radii");
  if (p.radii.size() < 3) throw ConfigError(what + ".radii: extrapolation needs >= 3 radii");
  if (b.contains("resolution")) p.scan.resolution = get_count(b["resolution"], what + ".resolution");
  if (p.scan.resolution < 16) throw ConfigError(what + ".resolution: must be >= 16");
  if (b.contains("samples")) p.coarea.samples = get_count(b["samples"], what + ".samples");
  if (b.contains("min_retained")) p.coarea.min_retained = get_count(b["min_retained"], what + ".min_retained");
  if (b.contains("delta")) {
    const double d = get_number(b["delta"], what + ".delta");
    if (!(d > 0.0)) throw ConfigError(what + ".delta: must be positive");
    p.coarea.delta = d;
  }
  if (p.coarea.samples == 0) throw ConfigError(what + ".samples: must be >= 1");
}

void read_kinf(const Json& b, std::size_t nvars, KinfBlock& k) {
  if (b.contains("radii")) k.radii = get_radii(b["radii"], "kinf.radii");
  if (k.radii.size() < 4) throw ConfigError("kinf.radii: need >= 4 radii");
  auto& o = k.options;
  if (b.contains("f_range")) {
    const auto fr = get_list(b["f_range"], "kinf.f_range");
    if (fr.size() != 2 || !(fr[1] > fr[0])) throw ConfigError("kinf.f_range: expected [lo, hi] with lo < hi");
    o.f_lo = fr[0];
    o.f_hi = fr[1];
  }
  if (b.contains("bins")) o.bins = get_count(b["bins"], "kinf.bins");
  if (o.bins == 0) throw ConfigError("kinf.bins: must be >= 1");
  if (b.contains("slope_threshold")) o.slope_threshold = get_number(b["slope_threshold"], "kinf.slope_threshold");
  if (b.contains("abs_threshold")) o.abs_threshold = get_number(b["abs_threshold"], "kinf.abs_threshold");
  if (b.contains("fit_radii")) o.fit_radii = get_count(b["fit_radii"], "kinf.fit_radii");
  if (o.fit_radii < 3) throw ConfigError("kinf.fit_radii: must be >= 3");
  if (b.contains("resolution")) {
    o.scan.resolution = get_count(b["resolution"], "kinf.resolution");
    o.circle.resolution = o.scan.resolution;
  }
  if (o.scan.resolution < 16) throw ConfigError("kinf.resolution: must be >= 16");
  if (b.contains("samples")) o.scan.samples = get_count(b["samples"], "kinf.samples");
  if (b.contains("sigma_t_grid")) {
    if (nvars != 2) throw ConfigError("kinf.sigma_t_grid: sigma envelopes need nvars = 2");
    k.sigma_t_grid = get_grid(b["sigma_t_grid"], "kinf.sigma_t_grid");
    if (k.sigma_t_grid.size() < 2) throw ConfigError("kinf.sigma_t_grid: need >= 2 points");
  }
  if (b.contains("sigma_r_max")) k.sigma_r_max = get_number(b["sigma_r_max"], "kinf.sigma_r_max");
  if (!(k.sigma_r_max > 1.0)) throw ConfigError("kinf.sigma_r_max: must exceed 1");
}

Json vec_json(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

Json profile_echo(const ProfileConfig& p) {
  Json j{{"method", to_string(p.method)}, {"radii", vec_json(p.radii)}, {"resolution", p.scan.resolution}};
  if (p.method != DensityMethod::kSphereCount) {
    j["samples"] = p.coarea.samples;
    j["min_retained"] = p.coarea.min_retained;
    j["delta"] = p.coarea.delta ? number(*p.coarea.delta) : Json();
  }
  return j;
}

Json kinf_echo(const KinfBlock& k) {
  const auto& o = k.options;
  Json j{{"radii", vec_json(k.radii)},
         {"f_range", {number(o.f_lo), number(o.f_hi)}},
         {"bins", o.bins},
         {"slope_threshold", number(o.slope_threshold)},
         {"abs_threshold", number(o.abs_threshold)},
         {"fit_radii", o.fit_radii},
         {"resolution", o.scan.resolution},
         {"samples", o.scan.samples}};
  if (!k.sigma_t_grid.empty()) {
    j["sigma_t_grid"] = vec_json(k.sigma_t_grid);
    j["sigma_r_max"] = number(k.sigma_r_max);
  }
  return j;
}

Table density_tables_curves(const std::vector<DensityCurve>& curves) {
  // method column holds the DensityMethod code: 0 sphere_count, 1 sphere_coarea, 2 ball_coarea, 3 inversion
  Table t{"density_curves", {"method", "t", "r", "value", "stderr", "reliable"}, {}};
  for (const auto& c : curves) {
    const auto code = static_cast<double>(static_cast<int>(c.method));
    for (const auto& s : c.samples) t.rows.push_back({code, c.t, s.r, s.value, s.stderr_, s.reliable ? 1.0 : 0.0});
  }
  return t;
}

using Clock = std::chrono::steady_clock;

// Runs one stage, recording wall time; a thrown exception marks the report failed.
bool stage(RunReport& rep, const std::string& name, const std::function<void()>& body) {
  const auto t0 = Clock::now();
  try {
    body();
  } catch (const std::exception& e) {
    rep.status = "failed";
    rep.error = name + ": " + e.what();
  }
  rep.timings[name] = std::chrono::duration<double>(Clock::now() - t0).count();
  return rep.status == "ok";
}

void add_kinf(RunReport& rep, const KinfResult& res, const std::string& prefix) {
  rep.stages[prefix] = to_json(res);
  Table env{prefix + "_envelope", {"r", "bin_center", "min_nu"}, {}};
  for (std::size_t j = 0; j < res.envelope.radii.size(); ++j) {
    for (std::size_t b = 0; b + 1 < res.envelope.bin_edges.size(); ++b) {
      env.rows.push_back({res.envelope.radii[j], res.envelope.bin_center(b), res.envelope.min_nu[j][b]});
    }
  }
  Table slopes{prefix + "_bin_slopes", {"bin_center", "slope"}, {}};
  for (std::size_t b = 0; b < res.bin_slopes.size(); ++b) {
    slopes.rows.push_back({res.envelope.bin_center(b), res.bin_slopes[b]});
  }
  Table cand{prefix + "_candidates", {"value", "bin_width", "decay_slope", "final_nu", "n_witnesses"}, {}};
  for (const auto& c : res.candidates) {
    cand.rows.push_back({c.value, c.bin_width, c.decay_slope, c.final_nu, static_cast<double>(c.witnesses.size())});
  }
  rep.tables.push_back(std::move(env));
  rep.tables.push_back(std::move(slopes));
  rep.tables.push_back(std::move(cand));
}

std::vector<double> candidate_values(const KinfResult& res) {
  std::vector<double> v;
  for (const auto& c : res.candidates) v.push_back(c.value);
  return v;
}

void run_sigma(RunReport& rep, const Polynomial& f, const KinfBlock& k) {
  std::vector<SigmaSample> samples;
  Json checks = Json::array();
  for (double t : k.sigma_t_grid) {
    const double s1 = sigma1(f, t);
    const double e1 = 1.1 * s1;
    const auto radii = sigma2_radii(e1, k.sigma_r_max);
    samples.push_back({t, s1, sigma2(f, t, e1, radii, k.options.circle)});
  }
  const SigmaEnvelope env = build_envelopes(samples);
  Json j = to_json(env);

  // every fiber point beyond eps1 must have nu above eps2; the check uses a
  // denser schedule than the one sigma2 was sampled on
  std::size_t points = 0, violations = 0;
  for (double t : env.t_grid) {
    for (double r : sigma2_radii(env.eps1(t), k.sigma_r_max, 1.02)) {
      if (r <= env.eps1(t)) continue;
      for (const auto& p : circle_fiber_points(f, t, r, k.options.circle).points) {
        ++points;
        if (!(p.rabier > env.eps2(t))) ++violations;
      }
    }
  }
  j["inequality_points"] = points;
  j["inequality_violations"] = violations;
  rep.stages["sigma"] = std::move(j);

  Table t{"sigma_envelope", {"t", "sigma1", "sigma2", "eps1", "eps2"}, {}};
  for (std::size_t i = 0; i < env.t_grid.size(); ++i) {
    t.rows.push_back({env.t_grid[i], env.sigma1[i], env.sigma2[i], env.eps1_nodes[i], env.eps2_nodes[i]});
  }
  rep.tables.push_back(std::move(t));
}

KinfOptions seeded(KinfOptions o, std::uint64_t seed) {
  o.scan.seed = seed;
  return o;
}

}  // namespace

Json RunConfig::echo() const {
  Json j{{"subcommand", subcommand}, {"seed", seed}};
  if (subcommand == "verify") return j;
  j["polynomial"] = polynomial;
  j["nvars"] = nvars;
  j["parsed"] = parsed().to_string();
  if (subcommand == "density") {
    j["density"] = profile_echo(density.profile);
    j["density"]["t"] = vec_json(density.t_values);
  } else if (subcommand == "kinf") {
    j["kinf"] = kinf_echo(kinf);
  } else if (subcommand == "lipschitz") {
    j["kinf"] = kinf_echo(kinf);
    j["lipschitz"] = profile_echo(lipschitz.profile);
    j["lipschitz"]["t_grid"] = vec_json(lipschitz.t_grid);
    j["lipschitz"]["jump_threshold"] = number(lipschitz.jump_threshold);
  } else if (subcommand == "rugosity") {
    j["kinf"] = kinf_echo(kinf);
    j["rugosity"] = {{"interval", {number(rugosity.a), number(rugosity.b)}},
                     {"radii", vec_json(rugosity.radii)},
                     {"pairs_per_radius", rugosity.options.pairs_per_radius},
                     {"margin", number(rugosity.options.margin)}};
  }
  return j;
}

RunConfig parse_run_config(const Json& j, const std::string& subcommand,
                           std::optional<std::uint64_t> seed) {
  static const std::vector<std::string> kCommands = {"density", "kinf", "lipschitz", "rugosity", "verify"};
  if (std::find(kCommands.begin(), kCommands.end(), subcommand) == kCommands.end()) {
    throw ConfigError("unknown subcommand '" + subcommand + "'");
  }
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  RunConfig c;
  c.subcommand = subcommand;

  if (seed) {
    c.seed = *seed;
  } else if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) {
      throw ConfigError("seed: expected a non-negative integer");
    }
    if (j["seed"].is_number_integer() && j["seed"].get<long long>() < 0) throw ConfigError("seed: must be non-negative");
    c.seed = j["seed"].get<std::uint64_t>();
  } else {
    throw ConfigError("seed: missing (set it in the config or pass --seed)");
  }
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string()) throw ConfigError("output_dir: expected a string");
    c.output_dir = j["output_dir"].get<std::string>();
  }
  if (subcommand == "verify") return c;

  if (!j.contains("polynomial") || !j["polynomial"].is_string()) throw ConfigError("polynomial: missing expression");
  c.polynomial = j["polynomial"].get<std::string>();
  if (j.contains("nvars")) c.nvars = get_count(j["nvars"], "nvars");
  if (c.nvars < 2) throw ConfigError("nvars: must be >= 2");
  Polynomial f{c.nvars};
  try {
    f = c.parsed();
  } catch (const ParseError& e) {
    throw ConfigError(std::string("polynomial: parse error ") + e.what());
  }
  if (f.is_constant()) throw ConfigError("polynomial: must be non-constant");

  auto block = [&](const char* name) -> Json {
    if (!j.contains(name)) return Json::object();
    if (!j[name].is_object()) throw ConfigError(std::string(name) + ": expected an object");
    return j[name];
  };

  if (subcommand == "density") {
    const Json b = block("density");
    if (!b.contains("t")) throw ConfigError("density.t: missing level(s)");
    c.density.t_values = b["t"].is_array() ? get_list(b["t"], "density.t")
                                           : std::vector<double>{get_number(b["t"], "density.t")};
    if (c.density.t_values.empty()) throw ConfigError("density.t: empty");
    read_profile(b, "density", c.nvars, c.density.profile);
    c.density.profile.seed = c.seed;
    return c;
  }

  read_kinf(block("kinf"), c.nvars, c.kinf);

  if (subcommand == "lipschitz") {
    const Json b = block("lipschitz");
    if (!b.contains("t_grid")) throw ConfigError("lipschitz.t_grid: missing");
    c.lipschitz.t_grid = get_grid(b["t_grid"], "lipschitz.t_grid");
    if (c.lipschitz.t_grid.size() < 3) throw ConfigError("lipschitz.t_grid: need >= 3 points");
    if (b.contains("jump_threshold")) c.lipschitz.jump_threshold = get_number(b["jump_threshold"], "lipschitz.jump_threshold");
    if (!(c.lipschitz.jump_threshold > 0.0)) throw ConfigError("lipschitz.jump_threshold: must be positive");
    read_profile(b, "lipschitz", c.nvars, c.lipschitz.profile);
    c.lipschitz.profile.seed = c.seed;
  } else if (subcommand == "rugosity") {
    if (c.nvars != 2) throw ConfigError("rugosity: needs nvars = 2");
    const Json b = block("rugosity");
    if (!b.contains("interval")) throw ConfigError("rugosity.interval: missing");
    const auto iv = get_list(b["interval"], "rugosity.interval");
    if (iv.size() != 2 || !(iv[0] < iv[1])) throw ConfigError("rugosity.interval: expected [a, b] with a < b");
    c.rugosity.a = iv[0];
    c.rugosity.b = iv[1];
    if (b.contains("radii")) c.rugosity.radii = get_radii(b["radii"], "rugosity.radii");
    if (b.contains("pairs_per_radius")) {
      c.rugosity.options.pairs_per_radius = get_count(b["pairs_per_radius"], "rugosity.pairs_per_radius");
    }
    if (c.rugosity.options.pairs_per_radius == 0) throw ConfigError("rugosity.pairs_per_radius: must be >= 1");
    if (b.contains("margin")) c.rugosity.options.margin = get_number(b["margin"], "rugosity.margin");
    if (c.rugosity.options.margin < 0.0) throw ConfigError("rugosity.margin: must be >= 0");
    c.rugosity.options.seed = c.seed;
  }
  return c;
}

RunReport run(const RunConfig& cfg) {
  if (cfg.subcommand == "verify") return run_verify(cfg.seed);

  RunReport rep;
  rep.version = artifact_version();
  rep.subcommand = cfg.subcommand;
  rep.config = cfg.echo();
  const Polynomial f = cfg.parsed();

  if (cfg.subcommand == "density") {
    stage(rep, "density", [&] {
      std::vector<DensityCurve> curves;
      Json out = Json::array();
      Table est{"density_estimates", {"t", "theta", "stderr", "alpha", "flagged"}, {}};
      for (double t : cfg.density.t_values) {
        curves.push_back(density_curve(f, t, cfg.density.profile));
        DensityEstimate e;
        try {
          e = extrapolate_limit(curves.back());
        } catch (const EstimationError& err) {
          e.flagged = true;
          e.note = std::string("failed: ") + err.what();
        }
        out.push_back({{"t", number(t)}, {"estimate", to_json(e)}, {"curve", to_json(curves.back())}});
        est.rows.push_back({t, e.theta, e.stderr_, e.alpha, e.flagged ? 1.0 : 0.0});
      }
      rep.stages["density"] = std::move(out);
      rep.tables.push_back(density_tables_curves(curves));
      rep.tables.push_back(std::move(est));
    });
    return rep;
  }

  KinfResult kres;
  if (!stage(rep, "kinf", [&] {
        kres = detect_kinf(f, cfg.kinf.radii, seeded(cfg.kinf.options, cfg.seed));
        add_kinf(rep, kres, "kinf");
      })) {
    return rep;
  }
  const std::vector<double> cands = candidate_values(kres);

  if (cfg.subcommand == "kinf") {
    if (!cfg.kinf.sigma_t_grid.empty()) stage(rep, "sigma", [&] { run_sigma(rep, f, cfg.kinf); });
    return rep;
  }

  if (cfg.subcommand == "lipschitz") {
    stage(rep, "lipschitz", [&] {
      const auto& lb = cfg.lipschitz;
      const auto prof = density_profile(f, lb.t_grid, lb.profile);
      const LipschitzReport lr = lipschitz_report(
          lb.t_grid, prof, lb.jump_threshold, cands,
          [&](double t) { return estimate_theta(f, t, lb.profile); });
      rep.stages["lipschitz"] = to_json(lr);
      Table pt{"profile", {"t", "theta", "stderr"}, {}};
      for (std::size_t i = 0; i < lb.t_grid.size(); ++i) pt.rows.push_back({lb.t_grid[i], prof[i].theta, prof[i].stderr_});
      Table mt{"moduli", {"t_lo", "t_hi", "modulus"}, {}};
      for (std::size_t i = 0; i < lr.moduli.size(); ++i) mt.rows.push_back({lb.t_grid[i], lb.t_grid[i + 1], lr.moduli[i]});
      rep.tables.push_back(std::move(pt));
      rep.tables.push_back(std::move(mt));
    });
    return rep;
  }

  stage(rep, "rugosity", [&] {
    const auto& rb = cfg.rugosity;
    const RugosityReport rr = rugosity_check(f, rb.a, rb.b, rb.radii, cands, rb.options);
    rep.stages["rugosity"] = to_json(rr);
    Table per{"rugosity_radius", {"r", "max_ratio", "pairs"}, {}};
    for (const auto& s : rr.per_radius) per.rows.push_back({s.r, s.max_ratio, static_cast<double>(s.pairs)});
    Table pairs{"rugosity_pairs", {"r", "t", "t_y", "ratio", "v_tail_norm", "distance", "conformal_product"}, {}};
    for (const auto& p : rr.pairs) {
      pairs.rows.push_back({p.r, p.t, p.t_y, p.ratio, p.v_tail_norm, p.distance, p.conformal_product});
    }
    rep.tables.push_back(std::move(per));
    rep.tables.push_back(std::move(pairs));
    if (rr.refused) {
      rep.status = "failed";
      rep.error = "rugosity: refused: " + rr.diagnostic;
    }
  });
  return rep;
}

}  // namespace densinf
