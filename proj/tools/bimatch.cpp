#include <iostream>

#include "bimatch/cli.hpp"

int main(int argc, char** argv) { return bimatch::run_cli(argc, argv, std::cout, std::cerr); }
