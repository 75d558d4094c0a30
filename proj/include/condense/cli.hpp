#pragma once

namespace condense::cli {

// Full CLI entry point: parses argv, dispatches the subcommand, maps errors
// to exit codes (0 ok, 2 configuration, 3 size guard, 4 certification).
int run(int argc, const char* const* argv);

}  // namespace condense::cli
