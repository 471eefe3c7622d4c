#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace catts::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr unsigned long long kDefaultSeed = 42;

/// Runs one subcommand. args excludes the program name. Results go to out unless --output is given.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace catts::cli
