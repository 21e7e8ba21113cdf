#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "densinf/analysis.hpp"
#include "densinf/report.hpp"

namespace densinf {

/// Invalid or incomplete configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DensityBlock {
  std::vector<double> t_values;
  ProfileConfig profile;
};

struct KinfBlock {
  std::vector<double> radii = {8, 16, 32, 64, 128, 256};
  KinfOptions options;
  std::vector<double> sigma_t_grid;  // empty: no sigma envelopes
  double sigma_r_max = 256.0;
};

struct LipschitzBlock {
  std::vector<double> t_grid;
  double jump_threshold = 0.5;
  ProfileConfig profile;
};

struct RugosityBlock {
  double a = 0.0;
  double b = 0.0;
  std::vector<double> radii = {2, 4, 8, 16, 32, 64, 128, 256};
  RugosityOptions options;
};

struct RunConfig {
  std::string subcommand;
  std::string polynomial;
  std::size_t nvars = 2;
  std::uint64_t seed = 0;
  std::string output_dir = "densinf_out";
  DensityBlock density;
  KinfBlock kinf;
  LipschitzBlock lipschitz;
  RugosityBlock rugosity;

  Polynomial parsed() const { return parse_polynomial(polynomial, nvars); }
  /// Resolved settings, as echoed in report.json.
  Json echo() const;
};

/// Reads a JSON config for one subcommand. `seed` overrides the config seed;
/// one of the two must be present. Radii accept a list or {"r0", "count",
/// "ratio"}; t grids a list or {"lo", "hi", "count"}.
RunConfig parse_run_config(const Json& j, const std::string& subcommand,
                           std::optional<std::uint64_t> seed = std::nullopt);

/// Runs the pipeline. Numeric failures do not throw: the report comes back
/// with status "failed" and the stages completed so far.
RunReport run(const RunConfig& cfg);

/// Invariant suite on the built-in examples.
RunReport run_verify(std::uint64_t seed);

std::string artifact_version();

}  // namespace densinf
