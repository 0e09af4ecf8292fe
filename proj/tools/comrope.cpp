#include <iostream>

#include "comrope/cli.hpp"

int main(int argc, char** argv) { return comrope::cli::run(argc, argv, std::cout, std::cerr); }
