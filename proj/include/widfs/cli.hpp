#pragma once

namespace widfs::cli {

// Full command-line entry point (subcommands: simulate, calibrate, detect,
// track, eval). Returns the process exit code: 0 ok, 2 input error,
// 3 precondition/degeneracy error.
int run(int argc, const char* const* argv);

}  // namespace widfs::cli
