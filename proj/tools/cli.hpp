#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace merged::cli {

enum ExitCode : int { Ok = 0, ConfigError = 1, IoError = 2, VerificationFailed = 3 };

/// Runs the command line `args` (without the program name). Progress goes to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace merged::cli
