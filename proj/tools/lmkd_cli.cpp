#include <iostream>

#include "lmkd/cli.hpp"

int main(int argc, char** argv) { return lmkd::run_cli(argc, argv, std::cout, std::cerr); }
