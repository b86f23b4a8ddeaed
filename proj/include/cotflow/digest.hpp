// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace cotflow {

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);
/// Streams the file; throws DataError if it cannot be read.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace cotflow
