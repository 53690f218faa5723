#include <iostream>

#include "nbelnet/cli/app.hpp"

int main(int argc, char** argv) { return nbelnet::cli::run(argc, argv, std::cout, std::cerr); }
