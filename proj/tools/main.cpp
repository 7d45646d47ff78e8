#include <iostream>

#include "webrefine/cli.hpp"

int main(int argc, char** argv) { return webrefine::run_cli(argc, argv, std::cout, std::cerr); }
