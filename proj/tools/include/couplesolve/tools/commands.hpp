#pragma once

#include <iosfwd>

#include "couplesolve/tools/config.hpp"

namespace couplesolve::io {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitSolver = 3;

/// Runs one command. Results go to the configured output file or `out`;
/// human-readable reports (check) go to `out`. Throws on failure.
int execute(const RunConfig& config, std::ostream& out);

/// Parses argv, executes, and maps errors to exit codes: 0 success,
/// 2 validation failure, 3 solver failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace couplesolve::io
