#include <iostream>

#include "peak/cli.hpp"

int main(int argc, char** argv) { return peak::run_cli(argc, argv, std::cout, std::cerr); }
