#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "labcube/lab.hpp"

namespace labcube {

// Exit statuses of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFindings = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitUsage = 64;

// Runs one command line (args excludes the program name). The lab directory
// comes from --lab, then CUBE_LAB, then ./lab.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const EnvironmentMap& env);

}  // namespace labcube
