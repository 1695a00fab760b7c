#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "qthermo/cli/run_config.hpp"

namespace qthermo::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kNotConverged = 3 };

struct CommandRequest {
  std::string command;  // optimize | scan | transient | noise | fit
  std::optional<std::string> config_path;
  std::optional<std::string> input_path;  // fit only
  Overrides overrides;
  std::string data_dir;
};

/// Runs one command end to end; messages go to `log`. Returns the exit code.
int run_command(const CommandRequest& request, std::ostream& log);

}  // namespace qthermo::cli
