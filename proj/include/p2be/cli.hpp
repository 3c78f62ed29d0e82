// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace p2be::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command line (without the program name). Subcommands: train,
/// eval, corrupt, export-sim, defaults.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace p2be::cli
