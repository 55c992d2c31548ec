#include <iostream>

#include "xgbm/cli.hpp"

int main(int argc, char** argv) { return xgbm::run_cli(argc, argv, std::cout, std::cerr); }
