#ifndef DGAME_CLI_HPP
#define DGAME_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace dgame {

/// Exit codes of the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

/// Runs `dgame <subcommand> [flags]`. `args` excludes the program name.
/// Subcommands: solve, converge, simulate, bounds.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dgame

#endif
