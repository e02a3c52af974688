#pragma once
// Command-line front end. Kept in the library so tests can drive it in-process.
//
// Exit codes: 0 success (a BlowUp verdict is a success), 1 I/O failure,
// 2 configuration error or missing input, 3 numerical failure (step underflow).

#include <ostream>
#include <string>
#include <vector>

namespace cgl {

enum ExitCode : int { kExitOk = 0, kExitIo = 1, kExitConfig = 2, kExitNumerical = 3 };

/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cgl
