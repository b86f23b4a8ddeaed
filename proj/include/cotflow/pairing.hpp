// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#pragma once

/**
 * @file pairing.hpp
 * @brief Matching CoT and Standard records by id.
 */

#include <set>
#include <span>
#include <string>
#include <vector>

#include "cotflow/model.hpp"

namespace cotflow {

struct PairedRecord {
  TraceRecord cot;
  TraceRecord standard;
};

enum class PairSide { cot_only, standard_only };
std::string_view to_string(PairSide side);

struct Unpaired {
  std::string id;
  PairSide side;

  bool operator==(const Unpaired&) const = default;
};

struct PairingResult {
  std::vector<PairedRecord> pairs;  // in cot order
  std::vector<Unpaired> unpaired;   // cot-only in cot order, then standard-only in standard order
};

/// Throws DataError on a duplicate id within one side, on a record whose
/// prompt_kind does not match its side, or on a pair whose datasets differ.
PairingResult pair_records(std::vector<TraceRecord> cot, std::vector<TraceRecord> standard);

struct IdPairing {
  std::set<std::string> paired;
  std::vector<Unpaired> unpaired;
};

/// Id-only pairing for streaming callers: read ids in a first pass, then
/// keep only paired records in a second. Throws DataError on duplicates.
IdPairing pair_ids(std::span<const std::string> cot_ids, std::span<const std::string> standard_ids);

}  // namespace cotflow
