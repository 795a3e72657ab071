#pragma once

// On-disk series store and the ingestion pipeline.
//
// Layout under the store root:
//   store.json                      marker written by init
//   series/<id>/manifest.json       slices, offset tables, ingest report
//   series/<id>/metadata.json       MetadataDocument
//   series/<id>/slices/NNNNNN.mistcs
//   ingest_log.jsonl                one line per ingest run
//   locks/, tmp/                    commit scratch space

#include "mist/codestream_index.hpp"
#include "mist/error.hpp"
#include "mist/formats.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mist {

struct ExcludedFile {
  std::string path;
  ExclusionReason reason = ExclusionReason::Unreadable;
  std::string message;
};

struct IngestReport {
  std::size_t files_seen = 0;
  std::vector<ExcludedFile> files_excluded;
  std::vector<std::string> source_files;
};

struct SliceEntry {
  std::size_t index = 0;
  std::string file;  // relative to the series directory
  std::uint64_t length = 0;
  OffsetTable offsets;
};

struct SeriesRecord {
  std::string series_id;
  FormatKind format = FormatKind::Raster;
  std::size_t num_slices = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  int n_levels = 0;
  std::uint64_t original_bytes = 0;
  std::vector<SliceEntry> slices;
  IngestReport ingest_report;

  int max_level() const noexcept { return n_levels + 1; }
  std::uint64_t stored_bytes() const;
  /// Sum over slices of prefix_length(level).
  std::uint64_t prefix_bytes(int level) const;
};

void to_json(nlohmann::json& j, const ExcludedFile& e);
void from_json(const nlohmann::json& j, ExcludedFile& e);
void to_json(nlohmann::json& j, const IngestReport& r);
void from_json(const nlohmann::json& j, IngestReport& r);
void to_json(nlohmann::json& j, const SeriesRecord& r);
void from_json(const nlohmann::json& j, SeriesRecord& r);

struct IngestResult {
  std::vector<SeriesRecord> series;  // committed or already present
  IngestReport report;
  std::vector<std::string> deduplicated;  // ids that were already stored
};

/// A series decoded at one level, with geometry rescaled to match.
struct FetchedSeries {
  SeriesRecord record;
  DecodedSeries series;
  int level = 0;
  std::uint64_t bytes_read = 0;
};

struct SeriesEfficiency {
  std::string series_id;
  FormatKind format = FormatKind::Raster;
  std::size_t num_slices = 0;
  int max_level = 0;
  std::uint64_t original_bytes = 0;
  std::uint64_t stored_bytes = 0;
  std::vector<std::uint64_t> level_bytes;  // index i holds level i+1
};

struct EfficiencyReport {
  std::vector<SeriesEfficiency> series;
  std::uint64_t original_bytes = 0;
  std::uint64_t stored_bytes = 0;
  /// Aggregate cumulative prefix bytes; a series shallower than level i
  /// contributes its own top level.
  std::vector<std::uint64_t> level_bytes;
  std::size_t files_seen = 0;
  std::size_t files_excluded = 0;
};

/// (value - reference) / reference * 100; 0 when reference is 0.
double percent_change(double value, double reference) noexcept;

class Store {
 public:
  /// Creates the layout (idempotent) and opens it.
  static Store init(const std::filesystem::path& root);
  /// Throws NotFound unless `root` was initialised.
  static Store open(const std::filesystem::path& root);

  const std::filesystem::path& root() const noexcept { return root_; }

  /// Ingests a file or a directory tree. Throws NothingIngestable when every
  /// input file is excluded.
  IngestResult ingest(const std::filesystem::path& input, std::optional<FormatKind> hint = {});

  /// Encodes and commits one decoded series.
  SeriesRecord commit(const DecodedSeries& series, const IngestReport& report = {},
                      std::uint64_t original_bytes = 0);

  std::vector<std::string> list() const;  // sorted
  bool contains(const std::string& series_id) const;
  SeriesRecord record(const std::string& series_id) const;  // NotFound
  MetadataDocument metadata(const std::string& series_id) const;
  std::string manifest_text(const std::string& series_id) const;

  /// Exactly prefix_length(level) bytes of slice `k`; only those are read.
  std::vector<std::uint8_t> get_slice_prefix(const std::string& series_id, std::size_t k,
                                             int level) const;
  std::vector<std::uint8_t> read_codestream(const std::string& series_id, std::size_t k) const;

  /// Decodes every slice at `level` (top level when absent).
  FetchedSeries fetch(const std::string& series_id, std::optional<int> level = {}) const;

  EfficiencyReport stats() const;

  std::filesystem::path series_dir(const std::string& series_id) const;

 private:
  explicit Store(std::filesystem::path root) : root_(std::move(root)) {}
  void append_log(const nlohmann::json& line) const;

  std::filesystem::path root_;
};

/// Content hash identifying a decoded series.
std::string series_hash(const DecodedSeries& series);

}  // namespace mist
