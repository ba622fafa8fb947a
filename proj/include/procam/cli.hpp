#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace procam {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitIo = 3,
  kExitSchema = 4,
};

/// Entry point of the procam-calib tool. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace procam
