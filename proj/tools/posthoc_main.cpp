#include "posthoc/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return posthoc::cli::main(argc, argv, std::cout, std::cerr); }
