#ifndef FAMLOC_TOOLS_CLI_HPP_
#define FAMLOC_TOOLS_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace famloc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

/// Runs one famloc invocation. args excludes the program name.
/// Subcommands: fam, localize, evaluate, tune, joint-eval, classify.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace famloc::cli

#endif  // FAMLOC_TOOLS_CLI_HPP_
