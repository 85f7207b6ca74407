#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

namespace conex {

struct ProcessResult {
  int exit_code = -1;
  bool timed_out = false;
  std::string out;
  std::string err;
  std::chrono::duration<double> elapsed{0};
};

/// Runs `command` through /bin/sh -c with extra environment variables,
/// capturing stdout and stderr. A zero timeout means no limit; on expiry the
/// whole process group is killed. Throws std::system_error if the process
/// cannot be started.
ProcessResult run_shell(const std::string& command,
                        const std::vector<std::pair<std::string, std::string>>& extra_env,
                        std::chrono::milliseconds timeout);

}  // namespace conex
