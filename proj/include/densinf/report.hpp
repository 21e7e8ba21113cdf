#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "densinf/analysis.hpp"
#include "densinf/density.hpp"
#include "densinf/kinf.hpp"

namespace densinf {

using Json = nlohmann::ordered_json;

/// Finite doubles stay numbers; inf, -inf and nan become strings.
Json number(double x);
double number_from(const Json& j);

Json to_json(const DensityCurve& c);
Json to_json(const DensityEstimate& e);
Json to_json(const KinfCandidate& c);
Json to_json(const KinfResult& r);
Json to_json(const SigmaEnvelope& e);
Json to_json(const LipschitzReport& r);
Json to_json(const RugosityReport& r);

/// Numeric table emitted both as tables/<name>.csv and plots/<name>.dat.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  bool operator==(const Table&) const = default;
};

/// %.17g cells; non-finite values print as inf, -inf, nan.
std::string format_csv(const Table& t);
/// Whitespace-separated columns under a "# col ..." header line.
std::string format_dat(const Table& t);
Table parse_csv(const std::string& name, const std::string& text);

struct RunReport {
  std::string version;
  std::string subcommand;
  Json config;  // echo of the resolved configuration
  Json stages = Json::object();
  std::string status = "ok";  // ok | failed
  std::string error;
  std::vector<Table> tables;
  std::map<std::string, double> timings;  // seconds; written to timings.json only

  /// report.json content: everything except tables and timings.
  Json to_json() const;
  static RunReport from_json(const Json& j);
};

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes report.json, timings.json, tables/*.csv and plots/*.dat under dir.
/// Throws OutputError when a file cannot be written.
void emit_report(const RunReport& report, const std::filesystem::path& dir);

}  // namespace densinf
