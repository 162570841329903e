#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "sdrgain/error.hpp"

namespace sdrgain::cli {

/// Process exit codes. Library errors map by kind; argument errors are 2.
enum ExitCode : int {
  kOk = 0,
  kUnexpected = 1,
  kUsage = 2,
  kIo = 3,
  kParse = 4,
  kData = 5,
  kShape = 6,
  kConfig = 7,
  kNumeric = 8,
  kCheckpoint = 9,
  kGeometry = 10,
};

int exit_code_for(ErrorKind kind) noexcept;

/// Runs one command line. `args` excludes the program name. Diagnostics go
/// to `err`; the resolved configuration and progress go to `out`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sdrgain::cli
