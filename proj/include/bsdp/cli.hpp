#pragma once

#include <string>
#include <vector>

namespace bsdp::cli {

// Runs the command-line driver in-process. `args` excludes the program name.
// Returns the process exit code: 0 on success, 1 when a stage fails, 2 on
// usage errors.
int run(std::vector<std::string> args);
int run(int argc, const char* const* argv);

}  // namespace bsdp::cli
