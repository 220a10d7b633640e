#include <iostream>

#include "couplesolve/tools/commands.hpp"

int main(int argc, char** argv) { return couplesolve::io::run_cli(argc, argv, std::cout, std::cerr); }
