// densinf: density at infinity of polynomial fibers.
//
// Exit codes: 0 success, 2 invalid configuration, 3 numeric stage failure
// (partial report written), 4 output cannot be written.

#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "densinf/run.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericFailure = 3;
constexpr int kOutputError = 4;

densinf::Json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw densinf::ConfigError("cannot open config file " + path);
  try {
    return densinf::Json::parse(in);
  } catch (const densinf::Json::parse_error& e) {
    throw densinf::ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Density at infinity of polynomial fibers", "densinf"};
  app.set_version_flag("--version", densinf::artifact_version());
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"density", "Density profile theta(f^-1(t), inf) over a radius schedule"},
      {"kinf", "Asymptotic critical value candidates from the Rabier envelope"},
      {"lipschitz", "Empirical Lipschitz check of t -> theta(f^-1(t), inf)"},
      {"rugosity", "Rugosity ratios of the inverted flow field on an interval"},
      {"verify", "Invariant suite on built-in examples"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    auto* cfg = sub->add_option("--config", config_path, "JSON config file");
    if (name != "verify") cfg->required();
    sub->add_option("--seed", seed, "RNG seed (overrides the config)");
    sub->add_option("--out", out_dir, "Output directory (overrides the config)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }
  const std::string subcommand = app.get_subcommands().front()->get_name();

  densinf::RunConfig cfg;
  try {
    const densinf::Json raw = config_path.empty() ? densinf::Json::object() : load_config(config_path);
    cfg = densinf::parse_run_config(raw, subcommand, seed);
    if (out_dir) cfg.output_dir = *out_dir;
  } catch (const densinf::ConfigError& e) {
    std::cerr << "densinf: " << e.what() << "\n";
    return kConfigError;
  }

  const densinf::RunReport report = densinf::run(cfg);
  try {
    densinf::emit_report(report, cfg.output_dir);
  } catch (const densinf::OutputError& e) {
    std::cerr << "densinf: " << e.what() << "\n";
    return kOutputError;
  }
  if (report.status != "ok") {
    std::cerr << "densinf: " << report.error << " (partial report in " << cfg.output_dir << ")\n";
    return kNumericFailure;
  }
  std::cout << "report written to " << cfg.output_dir << "/report.json\n";
  return 0;
}
