#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace volfair::cli {

/// Process exit statuses.
enum Exit : int {
  kFair = 0,
  kUnfair = 1,
  kUnknown = 2,
  kUsage = 64,
  kUnavailable = 69,
};

/// Entry point of the `volfair` tool; returns the exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Checks a JSON-lines trace for monotone bounds; one message per violation.
std::vector<std::string> lint_trace(std::istream& in);

}  // namespace volfair::cli
