#include <iostream>

#include "pmca/cli.hpp"

int main(int argc, char** argv) { return pmca::run_cli(argc, argv, std::cout, std::cerr); }
