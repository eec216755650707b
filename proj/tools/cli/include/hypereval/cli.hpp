#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hypereval::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kValidation = 2, kIo = 3 };

/// Runs the command line `args` (without the program name). Data goes to
/// `out`, diagnostics to `err`; `in` backs the `-` path.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace hypereval::cli
