#pragma once

namespace dedcons::cli {

/// Parses argv and dispatches to a subcommand. Exit codes: 0 success,
/// 1 validation/configuration error, 2 partial run (some instances
/// unanswered or unscored).
int run_cli(int argc, char** argv);

}  // namespace dedcons::cli
