#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tokenprobe Authors

#include <fstream>
#include <sstream>
#include <string>

namespace fixtures {

inline std::string read_data(const std::string& name) {
    std::ifstream f(std::string(TOKENPROBE_DATA_DIR) + "/" + name, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline std::string preamble() { return read_data("preamble.txt"); }

}  // namespace fixtures
