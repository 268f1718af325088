#ifndef MIPCR_CLI_HPP
#define MIPCR_CLI_HPP

#include <iosfwd>

namespace mipcr {

/// Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitRuntime = 2 };

/// Entry point of the `mipcr` tool (simulate, impute, pool, enumerate).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mipcr

#endif
