#include <iostream>

#include "uirepair/cli.h"

int main(int argc, char** argv) { return uirepair::cli::run(argc, argv, std::cout, std::cerr); }
