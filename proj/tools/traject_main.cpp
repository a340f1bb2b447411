#include <iostream>

#include "traject/cli.hpp"

int main(int argc, char** argv) { return traject::cli::main(argc, argv, std::cout, std::cerr); }
