#include <iostream>

#include "mbhc/cli.hpp"

int main(int argc, char** argv) { return mbhc::run_cli(argc, argv, std::cout, std::cerr); }
