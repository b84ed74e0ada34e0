#include <iostream>

#include "gccsolver_cli/commands.hpp"

int main(int argc, char** argv) { return gccsolver::cli::run_cli(argc, argv, std::cout, std::cerr); }
