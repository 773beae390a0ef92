#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace contsurv {

// Runs the command-line front end. args excludes the program name.
// Returns 0 on success, 1 on usage errors, 2 on data/model errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace contsurv
