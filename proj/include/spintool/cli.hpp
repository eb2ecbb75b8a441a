#pragma once

// Command-line front end: wires JSON system configs and CSV data files to
// the library modules and emits JSON results (stdout) and CSV traces.

#include <string>
#include <vector>

#include "spintool/sequences.hpp"

namespace spintool::cli {

// Dispatch a full command line (without the program name). Returns the
// process exit status: 0 success, 1 reproduction out of tolerance,
// 2 usage or input error (diagnostics on stderr).
int run(const std::vector<std::string>& args);

// Load a SpinSystem from a SystemConfig JSON file.
SpinSystem load_system(const std::string& path);

} // namespace spintool::cli
