// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "flexibit/cli.hpp"

int main(int argc, char** argv) { return flexibit::cli_main(argc, argv, std::cout, std::cerr); }
