// Copyright 2026 The ttt_lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>
#include <vector>

#include "ttt_lab/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ttt::cli::run_cli(args, std::cout, std::cerr);
}
