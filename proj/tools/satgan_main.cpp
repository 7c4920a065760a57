#include <iostream>

#include "satgan/cli.hpp"

int main(int argc, char** argv) { return satgan::run_cli(argc, argv, std::cout, std::cerr); }
