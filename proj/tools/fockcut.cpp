#include "fockcut/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return fockcut::run_cli(argc, argv, std::cout, std::cerr); }
