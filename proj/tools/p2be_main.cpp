// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "p2be/cli.hpp"

int main(int argc, char** argv) {
  return p2be::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
