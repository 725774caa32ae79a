#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace ggflow::cli {

using nlohmann::json;

inline constexpr const char* kSchema = "ggflow/1";
inline constexpr const char* kVersion = "0.1.0";

/// Invalid configuration; `field` names the offending key (dotted path).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct RunResult {
  /// 0 when every check passed, 1 otherwise.
  int exit_code = 0;
  json report;
};

/// Runs one scenario and writes report.json plus CSV files into out_dir.
/// `base_dir` resolves relative file references in the config. Throws ConfigError.
RunResult run_config(const json& config, const std::filesystem::path& out_dir,
                     const std::filesystem::path& base_dir = {});

/// Command-line entry point: ggflow <scenario> --config path [--seed k] [--out dir].
/// Returns the process exit status (0 ok, 1 failed check, 2 configuration error).
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace ggflow::cli
