#include <iostream>

#include "eigenspine/cli.hpp"

int main(int argc, char** argv) { return eigenspine::cli::run(argc, argv, std::cout, std::cerr); }
