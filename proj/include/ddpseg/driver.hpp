#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ddpseg {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

// Entry point for the `ddpseg` command line. `args` excludes the program
// name. Verbs: gen, cost, solve, fit, eval, gradcheck. Every verb accepts
// `--config file.json`; values from the file's `<verb>` section fill in any
// option not given on the command line.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ddpseg
