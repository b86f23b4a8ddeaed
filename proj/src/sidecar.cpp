// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#include "cotflow/sidecar.hpp"

#include <array>
#include <cstring>
#include <limits>

namespace cotflow::sidecar {

namespace {

void put_u16(std::string& buf, uint16_t v) {
  buf.push_back(char(v & 0xFF));
  buf.push_back(char((v >> 8) & 0xFF));
}

void put_u32(std::string& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(char((v >> (8 * i)) & 0xFF));
}

uint32_t get_u32(const unsigned char* p) {
  return uint32_t(p[0]) | (uint32_t(p[1]) << 8) | (uint32_t(p[2]) << 16) | (uint32_t(p[3]) << 24);
}

uint16_t get_u16(const unsigned char* p) { return uint16_t(p[0] | (p[1] << 8)); }

}  // namespace

Writer::Writer(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw DataError("cannot open sidecar for writing: " + path.string());
  std::string header(kMagic, kMagic + 4);
  put_u16(header, kVersion);
  out_.write(header.data(), std::streamsize(header.size()));
  offset_ = header.size();
}

uint64_t Writer::append(const std::string& id, const ActivationProfile& profile) {
  if (id.size() > std::numeric_limits<uint16_t>::max()) throw DataError("record id too long for sidecar: " + id);
  if (profile.counts.size() != size_t(profile.num_steps) * profile.num_layers) {
    throw DataError("activation counts do not match T x L for record " + id);
  }
  std::string buf;
  buf.reserve(2 + id.size() + 12 + 4 * profile.counts.size());
  put_u16(buf, uint16_t(id.size()));
  buf += id;
  put_u32(buf, profile.num_steps);
  put_u32(buf, profile.num_layers);
  put_u32(buf, profile.ffn_width);
  for (uint32_t c : profile.counts) put_u32(buf, c);
  const uint64_t at = offset_;
  out_.write(buf.data(), std::streamsize(buf.size()));
  if (!out_) throw DataError("sidecar write failed");
  offset_ += buf.size();
  return at;
}

void Writer::close() {
  out_.flush();
  if (!out_) throw DataError("sidecar write failed");
  out_.close();
}

Reader::Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw DataError("cannot open sidecar: " + path.string());
  std::array<unsigned char, kHeaderSize> header{};
  in_.read(reinterpret_cast<char*>(header.data()), header.size());
  if (!in_ || std::memcmp(header.data(), kMagic, 4) != 0) {
    throw DataError("not an activation sidecar (bad magic): " + path.string());
  }
  const uint16_t version = get_u16(header.data() + 4);
  if (version != kVersion) {
    throw DataError("unsupported sidecar version " + std::to_string(version) + ": " + path.string());
  }
}

Block Reader::read_block() {
  unsigned char len_buf[2];
  in_.read(reinterpret_cast<char*>(len_buf), 2);
  if (!in_) throw DataError("truncated sidecar block in " + path_.string());
  Block block;
  block.id.resize(get_u16(len_buf));
  in_.read(block.id.data(), std::streamsize(block.id.size()));
  unsigned char dims[12];
  in_.read(reinterpret_cast<char*>(dims), 12);
  if (!in_) throw DataError("truncated sidecar block in " + path_.string());
  auto& p = block.profile;
  p.num_steps = get_u32(dims);
  p.num_layers = get_u32(dims + 4);
  p.ffn_width = get_u32(dims + 8);
  const size_t n = size_t(p.num_steps) * p.num_layers;
  std::vector<unsigned char> raw(4 * n);
  in_.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
  if (!in_) throw DataError("truncated sidecar counts for record " + block.id);
  p.counts.resize(n);
  for (size_t i = 0; i < n; ++i) p.counts[i] = get_u32(raw.data() + 4 * i);
  return block;
}

Block Reader::read_at(uint64_t offset) {
  in_.clear();
  in_.seekg(std::streamoff(offset));
  if (!in_) throw DataError("sidecar offset out of range: " + std::to_string(offset));
  return read_block();
}

bool Reader::next(Block& block) {
  if (in_.peek() == std::char_traits<char>::eof()) return false;
  block = read_block();
  return true;
}

}  // namespace cotflow::sidecar
