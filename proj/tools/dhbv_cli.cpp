#include "dhbv/cli/commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return dhbv::cli::run(argc, argv, std::cout, std::cerr); }
