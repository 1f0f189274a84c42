#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return dtd::cli::dispatch(argc, argv, std::cout, std::cerr); }
