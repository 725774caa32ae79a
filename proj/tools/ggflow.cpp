#include <iostream>

#include "cli/runner.hpp"

int main(int argc, char** argv) { return ggflow::cli::main_entry(argc, argv, std::cout, std::cerr); }
