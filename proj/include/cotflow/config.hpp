// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#pragma once

/**
 * @file config.hpp
 * @brief Effective analysis settings: command line over config file over
 * built-in defaults. Every value remembers where it came from.
 *
 * The config file is a JSON object; its path comes from COTFLOW_CONFIG
 * unless given explicitly. Keys:
 *
 *   lexicon       path to a lexicon JSON, or null for the built-in one
 *   entity_spec   path to a dataset/entity-spec JSON, or null
 *   bandwidth     positive number, or "silverman"
 *   grid_size     integer >= 2
 *   weighting     "per_record" or "token"
 *   strict        boolean; false reads traces leniently
 */

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

namespace cotflow {

inline constexpr const char* kConfigEnv = "COTFLOW_CONFIG";

class Config {
 public:
  struct Entry {
    nlohmann::json value;
    std::string source;  // "default", "config", "cli"
  };

  /// Defaults, then the file (if any), then the CLI overrides. Throws
  /// DataError for unreadable files, unknown keys or invalid values.
  static Config resolve(const nlohmann::json& cli_overrides, const std::optional<std::filesystem::path>& file);
  /// resolve() with the file taken from COTFLOW_CONFIG when set.
  static Config from_environment(const nlohmann::json& cli_overrides);

  const nlohmann::json& get(const std::string& key) const { return entries_.at(key).value; }
  std::optional<std::string> path_or_null(const std::string& key) const;
  /// {"key": {"value": ..., "source": ...}, ...} plus "config_file".
  nlohmann::ordered_json echo() const;

 private:
  void set(const std::string& key, const nlohmann::json& value, const std::string& source);

  std::map<std::string, Entry> entries_;
  std::optional<std::string> file_;
};

}  // namespace cotflow
