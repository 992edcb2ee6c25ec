#pragma once

#include <iosfwd>

namespace bimatch {

// Entry point of the `bimatch` tool. Returns the process exit status:
// 0 on success, 1 on a runtime error, 2 on a usage error. Diagnostics go to
// err as a single "bimatch: error: ..." line.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bimatch
