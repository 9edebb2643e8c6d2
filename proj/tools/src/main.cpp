#include "triproxy/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return triproxy::cli::main_entry(argc, argv, std::cout, std::cerr); }
