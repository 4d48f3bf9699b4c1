#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace huruf {

/// Entry point of the `huruf` tool. args excludes the program name. Data goes
/// to out, diagnostics to err; returns the process exit status.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace huruf
