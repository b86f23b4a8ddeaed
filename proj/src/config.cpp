// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#include "cotflow/config.hpp"

#include <cstdlib>
#include <fstream>

#include "cotflow/model.hpp"

namespace cotflow {

namespace {

void check_value(const std::string& key, const nlohmann::json& v) {
  auto bad = [&](const char* what) { throw DataError("config: " + key + " " + what); };
  if (key == "lexicon" || key == "entity_spec") {
    if (!v.is_null() && !v.is_string()) bad("must be a path or null");
  } else if (key == "bandwidth") {
    if (v.is_string()) {
      if (v.get<std::string>() != "silverman") bad("must be a positive number or \"silverman\"");
    } else if (!v.is_number() || !(v.get<double>() > 0.0)) {
      bad("must be a positive number or \"silverman\"");
    }
  } else if (key == "grid_size") {
    if (!v.is_number_integer() || v.get<int64_t>() < 2) bad("must be an integer >= 2");
  } else if (key == "weighting") {
    if (!v.is_string() || (v != "per_record" && v != "token")) bad("must be \"per_record\" or \"token\"");
  } else if (key == "strict") {
    if (!v.is_boolean()) bad("must be a boolean");
  } else {
    throw DataError("config: unknown key " + key);
  }
}

}  // namespace

void Config::set(const std::string& key, const nlohmann::json& value, const std::string& source) {
  check_value(key, value);
  entries_[key] = {value, source};
}

Config Config::resolve(const nlohmann::json& cli, const std::optional<std::filesystem::path>& file) {
  Config c;
  c.set("lexicon", nullptr, "default");
  c.set("entity_spec", nullptr, "default");
  c.set("bandwidth", "silverman", "default");
  c.set("grid_size", 256, "default");
  c.set("weighting", "per_record", "default");
  c.set("strict", true, "default");
  if (file) {
    std::ifstream in(*file);
    if (!in) throw DataError("config: cannot open " + file->string());
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("config: malformed JSON in " + file->string() + ": " + e.what());
    }
    if (!j.is_object()) throw DataError("config: " + file->string() + " must hold a JSON object");
    for (const auto& [k, v] : j.items()) c.set(k, v, "config");
    c.file_ = file->string();
  }
  if (cli.is_object()) {
    for (const auto& [k, v] : cli.items()) c.set(k, v, "cli");
  }
  return c;
}

Config Config::from_environment(const nlohmann::json& cli) {
  std::optional<std::filesystem::path> file;
  if (const char* env = std::getenv(kConfigEnv); env && *env) file = env;
  return resolve(cli, file);
}

std::optional<std::string> Config::path_or_null(const std::string& key) const {
  const auto& v = get(key);
  if (v.is_null()) return std::nullopt;
  return v.get<std::string>();
}

nlohmann::ordered_json Config::echo() const {
  nlohmann::ordered_json j;
  j["config_file"] = file_ ? nlohmann::ordered_json(*file_) : nlohmann::ordered_json(nullptr);
  for (const auto& [k, e] : entries_) j[k] = {{"value", e.value}, {"source", e.source}};
  return j;
}

}  // namespace cotflow
