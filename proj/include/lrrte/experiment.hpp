#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lrrte/benchmarks.hpp"

namespace lrrte {

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int { kExitOk = 0, kExitInvalidConfig = 2, kExitNotConverged = 3 };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VerifyOptions {
  int trials = 50;             // random instances per property suite
  int threshold_trials = 500;  // soft-threshold / truncation instances
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  StudyConfig study;
  std::string output_dir = "output";
  std::uint64_t seed = 0;
  VerifyOptions verify;
};

// Parses and validates. Missing keys take defaults, unknown keys throw ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

// Every effective parameter, defaults included. tau1/tau2 are null when they
// follow rho (resolved per row in summary.json).
nlohmann::json config_echo(const ExperimentConfig& cfg);

// JSON text with doubles written as %.17g, keys sorted, LF endings.
std::string dump_json(const nlohmann::json& j, int indent = 2);

// %.17g, with nan/inf spelled out.
std::string format_double(double x);

std::string table_csv(const std::vector<ConvergenceRow>& rows, bool inexact_columns);
std::string trace_csv(const SolveTrace& trace);
nlohmann::json summary(const ExperimentConfig& cfg, const std::vector<ConvergenceRow>& rows);

// Runs the study and writes table.csv, trace_<J>_<N>.csv and summary.json.
// Returns kExitOk or kExitNotConverged (artifacts written either way).
int run_experiment(const ExperimentConfig& cfg, std::ostream& log);

// Machine-readable error line for stderr.
std::string error_report(const std::string& kind, const std::string& message);

}  // namespace lrrte
