#pragma once

#include <iosfwd>

namespace bisurv::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsage = 1,
  kDataError = 2,
  kNonConvergence = 3,
};

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bisurv::cli
