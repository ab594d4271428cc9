#include <iostream>

#include "locvec/cli.hpp"

int main(int argc, char** argv) { return locvec::cli::run(argc, argv, std::cout, std::cerr); }
