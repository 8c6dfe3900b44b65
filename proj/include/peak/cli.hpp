#pragma once

#include <iosfwd>

namespace peak {

// Exit codes: 0 success, 1 runtime failure, 2 usage error. Diagnostics go to
// `err` as one line starting with "error[usage]" or "error[runtime:<kind>]".
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace peak
