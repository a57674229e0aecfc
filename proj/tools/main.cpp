#include "commands.hpp"

int main(int argc, char** argv) { return dedcons::cli::run_cli(argc, argv); }
