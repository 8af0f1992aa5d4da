#pragma once

#include <string>
#include <vector>

namespace reqgen {

// Entry point behind the `reqgen` binary: parses `args` (program name
// excluded) and runs the selected command. Returns the process exit code;
// errors print one line on stderr.
int run_command(std::vector<std::string> args);

}  // namespace reqgen
