#pragma once

#include <iosfwd>

namespace lmkd {

/// Entry point of the `lmkd` tool. Returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lmkd
