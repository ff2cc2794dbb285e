#include <iostream>

#include "hqnet/cli.h"

int main(int argc, char** argv) { return hqnet::run_cli(argc, argv, std::cout, std::cerr); }
