#include <iostream>

#include "netreg/cli_io.hpp"

int main(int argc, char** argv) { return netreg::run_cli(argc, argv, std::cout, std::cerr); }
