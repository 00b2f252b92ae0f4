#include <iostream>

#include "trendsens/cli.hpp"

int main(int argc, char** argv) { return trendsens::run_cli(argc, argv, std::cout, std::cerr); }
