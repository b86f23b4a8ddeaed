// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#pragma once

/**
 * @file sidecar.hpp
 * @brief Binary activation sidecar.
 *
 * Layout, all integers little-endian:
 *
 *   "CTAC" | version u16
 *   per block: id_len u16 | id bytes (UTF-8) | T u32 | L u32 | d1 u32 | T*L u32 counts (step-major)
 *
 * Blocks appear in record order. The owning trace file stores each block's
 * byte offset in its record line so blocks can be fetched by seeking.
 */

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "cotflow/model.hpp"

namespace cotflow::sidecar {

inline constexpr char kMagic[4] = {'C', 'T', 'A', 'C'};
inline constexpr uint16_t kVersion = 1;
inline constexpr uint64_t kHeaderSize = 6;

struct Block {
  std::string id;
  ActivationProfile profile;
};

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path);

  /// Returns the byte offset of the block.
  uint64_t append(const std::string& id, const ActivationProfile& profile);
  void close();
  uint64_t bytes_written() const { return offset_; }

 private:
  std::ofstream out_;
  uint64_t offset_ = 0;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path);

  Block read_at(uint64_t offset);
  /// Sequential scan from the current position; false at end of file.
  bool next(Block& block);

 private:
  Block read_block();

  std::filesystem::path path_;
  std::ifstream in_;
};

}  // namespace cotflow::sidecar
