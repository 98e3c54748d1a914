#ifndef FISHERRAO_CLI_APP_HPP
#define FISHERRAO_CLI_APP_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace fisherrao::cli {

/// Exit codes: 0 success, 2 input/validation error, 3 singular Fisher
/// information, 4 bound verification failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitSingular = 3;
inline constexpr int kExitBoundFail = 4;

/// Runs the command line (without argv[0]); all output goes to the given
/// streams. The real main() is a thin wrapper so tests drive this
/// directly.
int run_app(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fisherrao::cli

#endif
