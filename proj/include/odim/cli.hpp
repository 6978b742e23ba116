#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace odim {

enum exit_code : int {
    exit_ok = 0,
    exit_analysis = 1,  // e.g. single-class training data, mixed widths
    exit_input = 2,     // I/O, format or usage errors
};

// Runs the command line (args exclude the program name). Reports go to
// `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string> & args, std::ostream & out, std::ostream & err);

}  // namespace odim
