#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace popbp::cli {

/// Parses `args` (without the program name) and runs one subcommand:
/// fi, optimize, drop-values, sweep, simulate or compare-approx. CSV goes to
/// `out` unless --out names a file; diagnostics go to `err`. Returns the
/// process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Worker count from --workers, else the POPBP_WORKERS environment
/// variable, else 1 for n = 2 and the hardware concurrency otherwise.
int resolve_workers(int requested, int n);

}  // namespace popbp::cli
