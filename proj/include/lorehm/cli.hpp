#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace lorehm::cli {

// Exit codes: 0 success, 1 runtime or config failure (a JSON error record is
// written to `err`), 2 usage error.
int dispatch(std::span<const std::string> args, std::ostream& out, std::ostream& err);

} // namespace lorehm::cli
