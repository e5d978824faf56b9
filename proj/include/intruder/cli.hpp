// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace intruder::cli {

/// Process exit codes. Stable across releases.
enum ExitCode : int {
  kOk = 0,
  kInternalError = 1,
  kUsageError = 2,  // bad flags, unreadable or inconsistent inputs
  kEmptyResult = 3,
  kDiverged = 4,
};

/// Runs one invocation. args excludes the program name. Full results go to
/// files named by the flags; `out` receives a one-line summary and `err` any
/// diagnostics or usage text.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace intruder::cli
