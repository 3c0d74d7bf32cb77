#include <iostream>

#include "qst/cli.hpp"

int main(int argc, char** argv) { return qst::cli::run(argc, argv, std::cout, std::cerr); }
