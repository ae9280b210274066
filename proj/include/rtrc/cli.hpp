#pragma once

#include <ostream>

namespace rtrc {

/// Entry point of the `rtrc` command. Returns the process exit code. Errors
/// are reported as a single JSON line on `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rtrc
