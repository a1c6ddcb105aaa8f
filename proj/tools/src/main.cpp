#include <iostream>

#include "feedopt_cli/cli.hpp"

int main(int argc, char** argv) { return feedopt::cli::run(argc, argv, std::cout, std::cerr); }
