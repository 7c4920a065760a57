#pragma once

#include <ostream>

namespace satgan {

/// Runs one subcommand. Returns 0 on success; on failure writes a single
/// diagnostic line to `err` and returns nonzero (2 for usage errors).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace satgan
