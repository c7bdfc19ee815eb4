#include "tactile/cli/commands.hpp"

int main(int argc, char** argv) { return tactile::cli::run_command(argc, argv); }
