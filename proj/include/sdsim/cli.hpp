#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace sdsim {

/// Entry point behind the `sdsim` binary. `args` excludes the program name.
/// Returns the process exit status.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sdsim
