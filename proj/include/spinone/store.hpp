#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spinone/observables.hpp"

namespace spinone {

// One persisted sweep point. The identity of a row is its key; rows are
// appended once and never rewritten.
struct StoreRow {
  ObservablePoint point;
  std::string config_hash;
  std::uint64_t seed = 0;
  double seconds = 0.0;

  std::string key() const;
  bool is_error() const { return point.flags.rfind("error", 0) == 0 || point.flags.find(";error") != std::string::npos; }
};

std::string row_key(double lambda, int L, double D, double delta, SolverKind solver, const std::string& config_hash);

// 64-bit FNV-1a of `text`, as 16 hex digits.
std::string stable_hash(const std::string& text);

// Columns of the exported table, in order.
const std::vector<std::string>& export_columns();

// Directory-backed store: one CSV shard per (lambda, L) plus manifest.json.
// Appends go through a single writer per shard; the manifest is replaced
// atomically (write to a temporary file, then rename).
class ResultStore {
 public:
  explicit ResultStore(std::string dir, bool create = true);

  const std::string& dir() const { return dir_; }
  std::string shard_path(double lambda, int L) const;
  std::string manifest_path() const;
  std::string checkpoint_path(double lambda, int L) const;

  std::vector<StoreRow> load_shard(double lambda, int L) const;
  // All shards, in file-name order. Malformed lines are skipped.
  std::vector<StoreRow> load_all() const;

  void append(const StoreRow& row) const;

  bool has_manifest() const;
  nlohmann::json read_manifest() const;
  void write_manifest(const nlohmann::json& manifest) const;

 private:
  std::string dir_;
};

// Parses one shard file (full columns). Truncated trailing lines are skipped.
std::vector<StoreRow> read_shard_file(const std::string& path);

// Export tables, rows stably sorted by (L, D). Non-finite values print as nan.
std::string export_csv(std::vector<StoreRow> rows);
std::string export_json(std::vector<StoreRow> rows);
// Inverse of export_csv for the exported columns.
std::vector<StoreRow> parse_export_csv(const std::string& text);

// Export of the store at `dir` as "csv" or "json" text. Throws Error(usage)
// for an unknown format, Error(io) if the store does not exist.
std::string export_store(const std::string& dir, const std::string& format);

// Replaces `path` atomically with `content`.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace spinone
