#include "fgmm/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return fgmm::cli::run(argc, argv, std::cout, std::cerr); }
