// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cotflow Authors

#pragma once

/**
 * @file trace_io.hpp
 * @brief Line-delimited trace files.
 *
 * A trace file is UTF-8 text. Line 1 is the run manifest as a JSON object,
 * every following line is one TraceRecord as a JSON object. Activation
 * counts do not live in the text file; records that carry them reference a
 * block in the binary sidecar (see sidecar.hpp) named by the manifest's
 * "activation_sidecar" field, relative to the trace file's directory.
 *
 * Doubles are written in shortest round-trip form, so
 * read(write(x)) == x bit for bit.
 */

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "cotflow/model.hpp"
#include "cotflow/sidecar.hpp"

namespace cotflow {

inline constexpr std::string_view kTraceFormat = "cotflow-trace";
inline constexpr int kTraceVersion = 1;

/// Malformed manifest, or a malformed record in strict mode.
class TraceFormatError : public DataError {
 public:
  TraceFormatError(const std::string& what, size_t line) : DataError(what), line_(line) {}
  size_t line() const { return line_; }

 private:
  size_t line_;
};

struct RecordError {
  size_t line = 0;
  std::string id;  // empty if the line could not be parsed far enough
  std::string message;
};

struct ReadOptions {
  bool strict = true;
  /// Fetch sidecar blocks as records are yielded. Off for analyses that
  /// never look at activations.
  bool load_activations = true;
  /// Run validate_record on every record; violations are record errors.
  bool validate = true;
};

class TraceReader {
 public:
  explicit TraceReader(const std::filesystem::path& path, ReadOptions options = {});

  const RunManifest& manifest() const { return manifest_; }
  const std::optional<std::filesystem::path>& sidecar_path() const { return sidecar_path_; }

  /// Next record in file order, or nullopt at end. Strict mode throws
  /// TraceFormatError on the first bad record; lenient mode records it in
  /// errors() and moves on.
  std::optional<TraceRecord> next();

  const std::vector<RecordError>& errors() const { return errors_; }
  size_t records_read() const { return records_read_; }

 private:
  void fail(size_t line, const std::string& id, const std::string& message);

  std::filesystem::path path_;
  ReadOptions options_;
  std::ifstream in_;
  RunManifest manifest_;
  std::optional<std::filesystem::path> sidecar_path_;
  std::unique_ptr<sidecar::Reader> sidecar_;
  std::vector<RecordError> errors_;
  size_t line_ = 1;
  size_t records_read_ = 0;
  bool finished_ = false;
};

struct WriteOptions {
  bool strict = true;
};

/// Streams records to a trace file. Records go to "<path>.part" first; finish()
/// writes the manifest with the final count and moves the body into place.
/// Destroying an unfinished writer removes every partial file.
class TraceWriter {
 public:
  TraceWriter(const std::filesystem::path& path, RunManifest manifest, WriteOptions options = {});
  ~TraceWriter();
  TraceWriter(const TraceWriter&) = delete;
  TraceWriter& operator=(const TraceWriter&) = delete;

  /// Strict mode: an invalid or duplicate-id record aborts the write, removes
  /// partial output and throws DataError.
  void write(const TraceRecord& record);
  int64_t finish();

  std::filesystem::path sidecar_path() const;

 private:
  void abort();

  std::filesystem::path path_;
  std::filesystem::path body_path_;
  RunManifest manifest_;
  WriteOptions options_;
  std::ofstream body_;
  std::unique_ptr<sidecar::Writer> sidecar_;
  std::unordered_set<std::string> ids_;
  int64_t count_ = 0;
  bool done_ = false;
};

int64_t write_trace_stream(const RunManifest& manifest, std::span<const TraceRecord> records,
                           const std::filesystem::path& path, WriteOptions options = {});

/// Generator form: next() returns nullopt when exhausted.
int64_t write_trace_stream(const RunManifest& manifest, const std::function<std::optional<TraceRecord>()>& next,
                           const std::filesystem::path& path, WriteOptions options = {});

/// Convenience for tests and small files: reads every record into memory.
struct TraceFile {
  RunManifest manifest;
  std::vector<TraceRecord> records;
  std::vector<RecordError> errors;
};
TraceFile read_trace_file(const std::filesystem::path& path, ReadOptions options = {});

}  // namespace cotflow
