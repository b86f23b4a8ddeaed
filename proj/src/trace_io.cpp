// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#include "cotflow/trace_io.hpp"

#include <json.hpp>

namespace cotflow {

using ojson = nlohmann::ordered_json;
using json = nlohmann::json;

namespace {

ojson decode_to_json(const DecodeParams& d) {
  return ojson{{"strategy", "greedy"}, {"max_new_tokens", d.max_new_tokens}, {"shots", d.shots}};
}

ojson record_to_json(const TraceRecord& r, std::optional<uint64_t> sidecar_offset) {
  ojson j;
  j["id"] = r.id;
  j["dataset"] = r.dataset;
  j["prompt_kind"] = to_string(r.prompt_kind);
  j["prompt_source_dataset"] = r.prompt_source_dataset;
  j["model"] = r.model;
  j["prompt_text"] = r.prompt_text;
  j["question_text"] = r.question_text;
  j["gold_answer"] = r.gold_answer;
  j["generated_tokens"] = r.generated_tokens;
  j["token_probs"] = r.token_probs;
  if (r.topk) {
    ojson steps = ojson::array();
    for (const auto& s : *r.topk) steps.push_back(ojson::array({s.tokens, s.probs}));
    j["topk"] = std::move(steps);
  }
  if (r.answer_space) j["answer_space"] = *r.answer_space;
  j["decode_params"] = decode_to_json(r.decode);
  if (r.activations) {
    j["activations"] = ojson{{"sidecar_offset", *sidecar_offset},
                             {"num_steps", r.activations->num_steps},
                             {"num_layers", r.activations->num_layers},
                             {"ffn_width", r.activations->ffn_width}};
  }
  return j;
}

template <class T>
T field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw std::runtime_error(std::string("missing field '") + name + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw std::runtime_error(std::string("field '") + name + "' has the wrong type");
  }
}

struct ActivationRef {
  uint64_t offset = 0;
  uint32_t num_steps = 0;
  uint32_t num_layers = 0;
  uint32_t ffn_width = 0;
};

TraceRecord record_from_json(const json& j, std::optional<ActivationRef>& ref) {
  if (!j.is_object()) throw std::runtime_error("record line is not a JSON object");
  TraceRecord r;
  r.id = field<std::string>(j, "id");
  r.dataset = field<std::string>(j, "dataset");
  r.prompt_kind = parse_prompt_kind(field<std::string>(j, "prompt_kind"));
  r.prompt_source_dataset = field<std::string>(j, "prompt_source_dataset");
  r.model = field<std::string>(j, "model");
  r.prompt_text = field<std::string>(j, "prompt_text");
  r.question_text = field<std::string>(j, "question_text");
  r.gold_answer = field<std::string>(j, "gold_answer");
  r.generated_tokens = field<std::vector<std::string>>(j, "generated_tokens");
  r.token_probs = field<std::vector<double>>(j, "token_probs");
  if (auto it = j.find("topk"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw std::runtime_error("field 'topk' must be an array");
    std::vector<TopkStep> steps;
    steps.reserve(it->size());
    for (const auto& s : *it) {
      if (!s.is_array() || s.size() != 2) throw std::runtime_error("topk step must be a [tokens, probs] pair");
      try {
        steps.push_back({s[0].get<std::vector<std::string>>(), s[1].get<std::vector<double>>()});
      } catch (const json::exception&) {
        throw std::runtime_error("topk step has the wrong type");
      }
    }
    r.topk = std::move(steps);
  }
  if (auto it = j.find("answer_space"); it != j.end() && !it->is_null()) {
    r.answer_space = field<std::vector<std::string>>(j, "answer_space");
  }
  const auto decode = field<json>(j, "decode_params");
  if (field<std::string>(decode, "strategy") != "greedy") throw std::runtime_error("unsupported decode strategy");
  r.decode.max_new_tokens = field<int64_t>(decode, "max_new_tokens");
  r.decode.shots = field<int64_t>(decode, "shots");
  if (auto it = j.find("activations"); it != j.end() && !it->is_null()) {
    ActivationRef a;
    a.offset = field<uint64_t>(*it, "sidecar_offset");
    a.num_steps = field<uint32_t>(*it, "num_steps");
    a.num_layers = field<uint32_t>(*it, "num_layers");
    a.ffn_width = field<uint32_t>(*it, "ffn_width");
    ref = a;
  }
  return r;
}

RunManifest manifest_from_json(const json& j, std::optional<std::string>& sidecar) {
  if (!j.is_object()) throw std::runtime_error("manifest is not a JSON object");
  if (field<std::string>(j, "format") != kTraceFormat) throw std::runtime_error("not a cotflow trace file");
  if (field<int>(j, "version") != kTraceVersion) throw std::runtime_error("unsupported trace version");
  RunManifest m;
  m.model = field<std::string>(j, "model");
  m.dataset = field<std::string>(j, "dataset");
  m.prompt_kind = parse_prompt_kind(field<std::string>(j, "prompt_kind"));
  m.prompt_source_dataset = field<std::string>(j, "prompt_source_dataset");
  m.record_count = field<int64_t>(j, "record_count");
  if (auto it = j.find("accuracy"); it != j.end() && !it->is_null()) m.accuracy = field<double>(j, "accuracy");
  m.created_at = field<std::string>(j, "created_at");
  if (auto it = j.find("activation_sidecar"); it != j.end() && !it->is_null()) {
    sidecar = field<std::string>(j, "activation_sidecar");
  }
  return m;
}

ojson manifest_to_json(const RunManifest& m, const std::optional<std::string>& sidecar) {
  ojson j;
  j["format"] = kTraceFormat;
  j["version"] = kTraceVersion;
  j["model"] = m.model;
  j["dataset"] = m.dataset;
  j["prompt_kind"] = to_string(m.prompt_kind);
  j["prompt_source_dataset"] = m.prompt_source_dataset;
  j["record_count"] = m.record_count;
  if (m.accuracy) j["accuracy"] = *m.accuracy;
  j["created_at"] = m.created_at;
  j["activation_sidecar"] = sidecar ? ojson(*sidecar) : ojson(nullptr);
  return j;
}

std::string describe(const ValidationReport& report) {
  std::string out;
  for (const auto& v : report) {
    if (!out.empty()) out += "; ";
    out += v.path + ": " + v.reason;
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- reading

TraceReader::TraceReader(const std::filesystem::path& path, ReadOptions options)
    : path_(path), options_(options), in_(path) {
  if (!in_) throw TraceFormatError("cannot open trace file: " + path.string(), 0);
  std::string line;
  if (!std::getline(in_, line)) throw TraceFormatError("empty trace file (missing manifest): " + path.string(), 1);
  std::optional<std::string> sidecar_name;
  try {
    manifest_ = manifest_from_json(json::parse(line), sidecar_name);
  } catch (const std::exception& e) {
    throw TraceFormatError(path.string() + ":1: malformed manifest: " + e.what(), 1);
  }
  if (auto report = validate_manifest(manifest_); !report.empty()) {
    throw TraceFormatError(path.string() + ":1: invalid manifest: " + describe(report), 1);
  }
  if (sidecar_name) {
    sidecar_path_ = path.parent_path() / *sidecar_name;
    if (options_.load_activations) {
      try {
        sidecar_ = std::make_unique<sidecar::Reader>(*sidecar_path_);
      } catch (const DataError& e) {
        throw TraceFormatError(e.what(), 1);
      }
    }
  }
}

void TraceReader::fail(size_t line, const std::string& id, const std::string& message) {
  if (options_.strict) {
    std::string where = path_.string() + ":" + std::to_string(line);
    if (!id.empty()) where += " (record " + id + ")";
    throw TraceFormatError(where + ": " + message, line);
  }
  errors_.push_back({line, id, message});
}

std::optional<TraceRecord> TraceReader::next() {
  std::string line;
  while (!finished_) {
    if (!std::getline(in_, line)) {
      finished_ = true;
      if (int64_t(records_read_) != manifest_.record_count && (options_.strict ? true : errors_.empty())) {
        fail(line_, "", "manifest record_count " + std::to_string(manifest_.record_count) + " but " +
                            std::to_string(records_read_) + " records were read");
      }
      return std::nullopt;
    }
    ++line_;
    if (line.empty()) continue;

    std::optional<ActivationRef> ref;
    TraceRecord record;
    json parsed;
    try {
      parsed = json::parse(line);
    } catch (const json::exception& e) {
      fail(line_, "", std::string("malformed record: ") + e.what());
      continue;
    }
    std::string id;
    if (parsed.is_object()) {
      if (auto it = parsed.find("id"); it != parsed.end() && it->is_string()) id = it->get<std::string>();
    }
    try {
      record = record_from_json(parsed, ref);
    } catch (const std::exception& e) {
      fail(line_, id, std::string("malformed record: ") + e.what());
      continue;
    }
    if (ref && options_.load_activations) {
      if (!sidecar_) {
        fail(line_, id, "record references activations but the manifest names no sidecar");
        continue;
      }
      try {
        auto block = sidecar_->read_at(ref->offset);
        if (block.id != record.id) throw DataError("sidecar block at offset " + std::to_string(ref->offset) +
                                                   " belongs to record '" + block.id + "'");
        if (block.profile.num_steps != ref->num_steps || block.profile.num_layers != ref->num_layers ||
            block.profile.ffn_width != ref->ffn_width) {
          throw DataError("sidecar block shape differs from the record's activation header");
        }
        record.activations = std::move(block.profile);
      } catch (const DataError& e) {
        fail(line_, id, e.what());
        continue;
      }
    }
    if (options_.validate) {
      if (auto report = validate_record(record); !report.empty()) {
        fail(line_, id, "invalid record: " + describe(report));
        continue;
      }
    }
    ++records_read_;
    return record;
  }
  return std::nullopt;
}

TraceFile read_trace_file(const std::filesystem::path& path, ReadOptions options) {
  TraceReader reader(path, options);
  TraceFile file;
  file.manifest = reader.manifest();
  while (auto r = reader.next()) file.records.push_back(std::move(*r));
  file.errors = reader.errors();
  return file;
}

// ---------------------------------------------------------------- writing

TraceWriter::TraceWriter(const std::filesystem::path& path, RunManifest manifest, WriteOptions options)
    : path_(path), body_path_(path.string() + ".part"), manifest_(std::move(manifest)), options_(options) {
  body_.open(body_path_, std::ios::binary | std::ios::trunc);
  if (!body_) throw DataError("cannot open for writing: " + body_path_.string());
}

TraceWriter::~TraceWriter() {
  if (!done_) abort();
}

std::filesystem::path TraceWriter::sidecar_path() const {
  auto p = path_;
  p.replace_extension(".ctac");
  return p;
}

void TraceWriter::abort() {
  done_ = true;
  body_.close();
  sidecar_.reset();
  std::error_code ec;
  std::filesystem::remove(body_path_, ec);
  std::filesystem::remove(sidecar_path(), ec);
  std::filesystem::remove(path_, ec);
}

void TraceWriter::write(const TraceRecord& record) {
  if (done_) throw std::logic_error("TraceWriter used after finish()");
  if (options_.strict) {
    if (auto report = validate_record(record); !report.empty()) {
      abort();
      throw DataError("record " + record.id + " is invalid: " + describe(report));
    }
    if (!ids_.insert(record.id).second) {
      abort();
      throw DataError("duplicate record id " + record.id);
    }
  }
  std::optional<uint64_t> offset;
  if (record.activations) {
    if (!sidecar_) sidecar_ = std::make_unique<sidecar::Writer>(sidecar_path());
    offset = sidecar_->append(record.id, *record.activations);
  }
  body_ << record_to_json(record, offset).dump() << '\n';
  if (!body_) {
    abort();
    throw DataError("write failed: " + body_path_.string());
  }
  ++count_;
}

int64_t TraceWriter::finish() {
  if (done_) throw std::logic_error("TraceWriter::finish() called twice");
  try {
    body_.close();
    if (!body_) throw DataError("write failed: " + body_path_.string());
    std::optional<std::string> sidecar_name;
    if (sidecar_) {
      sidecar_->close();
      sidecar_name = sidecar_path().filename().string();
    } else {
      std::error_code ec;
      std::filesystem::remove(sidecar_path(), ec);
    }
    manifest_.record_count = count_;
    std::ofstream out(path_, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path_.string());
    out << manifest_to_json(manifest_, sidecar_name).dump() << '\n';
    std::ifstream body(body_path_, std::ios::binary);
    // inserting an empty streambuf sets failbit
    if (body.peek() != std::char_traits<char>::eof()) out << body.rdbuf();
    out.flush();
    if (!out) throw DataError("write failed: " + path_.string());
  } catch (...) {
    abort();
    throw;
  }
  done_ = true;
  std::error_code ec;
  std::filesystem::remove(body_path_, ec);
  return count_;
}

int64_t write_trace_stream(const RunManifest& manifest, std::span<const TraceRecord> records,
                           const std::filesystem::path& path, WriteOptions options) {
  TraceWriter writer(path, manifest, options);
  for (const auto& r : records) writer.write(r);
  return writer.finish();
}

int64_t write_trace_stream(const RunManifest& manifest, const std::function<std::optional<TraceRecord>()>& next,
                           const std::filesystem::path& path, WriteOptions options) {
  TraceWriter writer(path, manifest, options);
  while (auto r = next()) writer.write(*r);
  return writer.finish();
}

}  // namespace cotflow
