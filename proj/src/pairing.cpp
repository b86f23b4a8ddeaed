// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#include "cotflow/pairing.hpp"

#include <unordered_map>

namespace cotflow {

std::string_view to_string(PairSide side) { return side == PairSide::cot_only ? "cot-only" : "standard-only"; }

namespace {

std::set<std::string> unique_ids(std::span<const std::string> ids, const char* side) {
  std::set<std::string> out;
  for (const auto& id : ids) {
    if (!out.insert(id).second) throw DataError(std::string("duplicate id in ") + side + " stream: " + id);
  }
  return out;
}

}  // namespace

IdPairing pair_ids(std::span<const std::string> cot_ids, std::span<const std::string> standard_ids) {
  const auto cot = unique_ids(cot_ids, "cot");
  const auto std_set = unique_ids(standard_ids, "standard");
  IdPairing out;
  for (const auto& id : cot_ids) {
    if (std_set.count(id)) out.paired.insert(id);
    else out.unpaired.push_back({id, PairSide::cot_only});
  }
  for (const auto& id : standard_ids) {
    if (!cot.count(id)) out.unpaired.push_back({id, PairSide::standard_only});
  }
  return out;
}

PairingResult pair_records(std::vector<TraceRecord> cot, std::vector<TraceRecord> standard) {
  std::vector<std::string> cot_ids, std_ids;
  for (const auto& r : cot) {
    if (r.prompt_kind != PromptKind::cot) throw DataError("record " + r.id + " in the cot stream is not a cot record");
    cot_ids.push_back(r.id);
  }
  for (const auto& r : standard) {
    if (r.prompt_kind != PromptKind::standard) {
      throw DataError("record " + r.id + " in the standard stream is not a standard record");
    }
    std_ids.push_back(r.id);
  }
  auto ids = pair_ids(cot_ids, std_ids);
  std::unordered_map<std::string, size_t> std_index;
  for (size_t i = 0; i < standard.size(); ++i) std_index.emplace(standard[i].id, i);

  PairingResult out;
  out.unpaired = std::move(ids.unpaired);
  for (auto& r : cot) {
    if (!ids.paired.count(r.id)) continue;
    auto& s = standard[std_index.at(r.id)];
    if (r.dataset != s.dataset) {
      throw DataError("record " + r.id + " pairs datasets " + r.dataset + " and " + s.dataset);
    }
    out.pairs.push_back({std::move(r), std::move(s)});
  }
  return out;
}

}  // namespace cotflow
