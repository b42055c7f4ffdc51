#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace bnngp::cli {

enum ExitCode { kOk = 0, kUsage = 1, kNumerical = 2, kIo = 3 };

/// Runs the command line `args` (without the program name). Tables go to
/// --out, or to `out` when --out is "-" or absent; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bnngp::cli
