#pragma once

#include <ostream>

namespace mixbound::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kViolation = 2,
  kSchema = 3,
  kIo = 4,
};

//! Runs one subcommand. Output that is not redirected to files goes to `out`,
//! diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace mixbound::cli
