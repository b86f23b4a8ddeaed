// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "cotflow/model.hpp"

namespace testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("cotflow_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

inline cotflow::TraceRecord record(std::string id, std::vector<std::string> tokens,
                                   cotflow::PromptKind kind = cotflow::PromptKind::cot) {
  cotflow::TraceRecord r;
  r.id = std::move(id);
  r.dataset = "gsm8k";
  r.prompt_kind = kind;
  r.prompt_source_dataset = "gsm8k";
  r.model = "test-model";
  r.prompt_text = "Q: q?\nA: a.\n\n";
  r.question_text = "There are 3 cars and 2 more arrive. How many cars?";
  r.gold_answer = "5";
  r.generated_tokens = std::move(tokens);
  r.token_probs.assign(r.generated_tokens.size(), 0.5);
  return r;
}

inline cotflow::RunManifest manifest(cotflow::PromptKind kind = cotflow::PromptKind::cot, int64_t count = 0) {
  cotflow::RunManifest m;
  m.model = "test-model";
  m.dataset = "gsm8k";
  m.prompt_kind = kind;
  m.prompt_source_dataset = "gsm8k";
  m.record_count = count;
  m.created_at = "2026-01-01T00:00:00Z";
  return m;
}

inline cotflow::ActivationProfile profile(uint32_t steps, uint32_t layers, uint32_t width,
                                          std::vector<uint32_t> counts) {
  cotflow::ActivationProfile p;
  p.num_steps = steps;
  p.num_layers = layers;
  p.ffn_width = width;
  p.counts = std::move(counts);
  return p;
}

}  // namespace testing
