#pragma once

namespace qdaw::cli {

/// Entry point for the qdaw command-line tool. Exit codes: 0 success,
/// 2 infeasible selection, 3 untrained models, 1 any other failure.
int cli_main(int argc, char** argv);

}  // namespace qdaw::cli
