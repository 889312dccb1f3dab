#include "mfe/cli.h"

#include <iostream>

int main(int argc, char** argv) { return mfe::run_cli(argc, argv, std::cout, std::cerr); }
