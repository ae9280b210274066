#include <iostream>

#include "rtrc/cli.hpp"

int main(int argc, char** argv) { return rtrc::run_cli(argc, argv, std::cout, std::cerr); }
