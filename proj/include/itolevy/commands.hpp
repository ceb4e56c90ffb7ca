#pragma once

// Command implementations behind the itolevy executable. Each returns the
// process exit status: 0 success, 1 a check failed (or, under a negative
// control, the fault went undetected), 2 a configuration or usage error.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace itolevy::cli {

struct CommandOptions {
    std::string configPath;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> paths;
    std::optional<std::string> out;
    std::optional<std::string> format;
    bool dumpSeries = false;
    std::optional<std::string> negativeControl;
    std::vector<std::string> checks;
    std::optional<std::string> suite;
};

/// Environment variable that replaces output.path from the config.
inline constexpr const char* kOutputDirEnv = "ITOLEVY_OUTPUT_DIR";

/// Driver path dump for path index output.pathIndex (default paths.csv).
int cmd_simulate(const CommandOptions& options, std::ostream& out, std::ostream& err);

/// Operator integral path (default integral.csv), a summary record
/// (<stem>_summary.json) and, with dumpSeries, one <stem>_series_<j>.csv per mode.
int cmd_integrate(const CommandOptions& options, std::ostream& out, std::ostream& err);

/// Runs checks and writes reports (default reports.json or reports.csv).
int cmd_check(const CommandOptions& options, std::ostream& out, std::ostream& err);

} // namespace itolevy::cli
