#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace subterra::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitIncomplete = 2;

/// Entry point behind the `subterra` executable. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Applies SUBTERRA_LOG_LEVEL (error, warn, info, debug) to the default logger.
void configure_logging();

}  // namespace subterra::cli
