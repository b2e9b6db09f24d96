#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fingereye::harness {

/// Entry point behind the `fingereye` binary. args excludes the program
/// name. Returns 0 on success, 2 on usage errors, 1 on runtime errors; errors
/// are printed to `err` as a JSON object {"error","message"}.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fingereye::harness
