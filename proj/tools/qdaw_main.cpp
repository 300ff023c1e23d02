#include "qdaw/cli.hpp"

int main(int argc, char** argv) { return qdaw::cli::cli_main(argc, argv); }
