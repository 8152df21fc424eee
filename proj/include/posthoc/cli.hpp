#pragma once

// Configuration-driven experiment runner behind the `posthoc` binary.

#include "posthoc/fixtures.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace posthoc::cli {

inline constexpr const char* kSchemaVersion = "posthoc-report/1";

enum ExitCode : int { kOk = 0, kMismatch = 1, kUsage = 2, kFixtureMissing = 3, kValidation = 4 };

class UsageError : public Error {
public:
  using Error::Error;
};

struct ExperimentConfig {
  /// distortion | optimal | merge | pfunction | sequential | ville | examples
  std::string kind;
  /// Kind-specific keys (fixture references and options).
  Json params = Json::object();
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> n;
  std::string out_dir = "out";
  std::string backend = "exact";
  std::string format = "csv";
  /// Directory relative fixture paths are resolved against.
  std::string base_dir = ".";
};

const std::vector<std::string>& experiment_kinds();

/// Splits a config object into the common keys and `params`.
ExperimentConfig config_from_json(const Json& j, const std::string& base_dir = ".");

/// Checks kind, backend, format, n and the kind's parameter keys; throws UsageError.
void validate(const ExperimentConfig& cfg);

/// Ordered rows of JSON scalars; rendered as CSV or as a JSON array of objects.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Json>> rows;
};

std::string to_csv(const Table& t);
Json to_json(const Table& t);

struct RunResult {
  int exit_code = kOk;
  Json report;
  std::map<std::string, Table> tables;
  /// Offending check ids for the examples kind.
  std::vector<std::string> mismatches;
};

/// Runs an experiment without touching the file system.
RunResult execute(const ExperimentConfig& cfg);

/// execute() and write report.json plus one table file per table into
/// cfg.out_dir. Failures are written to `err` as a JSON object and mapped
/// to an exit code.
int run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);

/// The golden-number suite: every check compared exactly on the rational
/// backend and to 1e-10 on floats.
RunResult reproduce_examples(const std::string& backend);

/// Entry point of the binary.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace posthoc::cli
