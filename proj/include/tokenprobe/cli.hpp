#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tokenprobe Authors

/**
 * @file cli.hpp
 * @brief Command-line front end.
 *
 * Subcommands: analyze, reversal, compare, serve, monitor.
 *
 * Exit codes: 0 success, 1 unexpected failure, 2 usage error or unreadable
 * input, 3 backend failure.
 */

#include <iosfwd>
#include <string>
#include <vector>

namespace tokenprobe {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitBackend = 3;

/// `args` excludes the program name. `in` backs `--records -`.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace tokenprobe
