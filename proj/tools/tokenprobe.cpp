// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tokenprobe Authors

#include <iostream>
#include <string>
#include <vector>

#include "tokenprobe/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return tokenprobe::run_cli(args, std::cin, std::cout, std::cerr);
}
