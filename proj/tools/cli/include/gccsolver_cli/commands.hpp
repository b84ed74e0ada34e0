#pragma once

#include <iosfwd>

#include "gccsolver_cli/run_config.hpp"

namespace gccsolver::cli {

/// Runs one command; maps solver errors to exit codes and reports them on `err`.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

int cmd_price(const RunConfig& config, std::ostream& out);
int cmd_american(const RunConfig& config, std::ostream& out);
int cmd_nash(const RunConfig& config, std::ostream& out);
int cmd_verify(const RunConfig& config, std::ostream& out);
int cmd_selftest(const RunConfig& config, std::ostream& out);

/// Parses argv (subcommand first) and runs it.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gccsolver::cli
