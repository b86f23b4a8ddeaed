// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#pragma once

#include <string_view>

// Shipped default configuration files, compiled in from data/.
namespace cotflow::embedded {

extern const std::string_view lexicon_default_json;
extern const std::string_view datasets_json;
extern const std::string_view answer_options_json;

}  // namespace cotflow::embedded
