#pragma once

#include <ostream>

namespace uda::cli {

// Exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kInputError = 2,
  kNumericAbort = 3,
  kShapeMismatch = 4,
  kVerificationFailure = 5,
};

// Parses argv and runs one subcommand: train, eval, losses, gradcheck,
// gen-data or embed.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace uda::cli
