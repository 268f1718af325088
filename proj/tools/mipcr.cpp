#include <iostream>

#include "mipcr/cli.hpp"

int main(int argc, char** argv) { return mipcr::run_cli(argc, argv, std::cout, std::cerr); }
