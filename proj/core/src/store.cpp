#include "mist/store.hpp"

#include "hash.hpp"
#include "mist/hierarchy.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace mist {
namespace fs = std::filesystem;

namespace {

constexpr const char* kMarker = "store.json";

std::string slice_file(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "slices/%06zu.mistcs", index);
  return buf;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

bool valid_id(const std::string& id) {
  return !id.empty() && id.size() <= 128 &&
         std::all_of(id.begin(), id.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); });
}

// Exclusive lock file held for the lifetime of the object.
class LockFile {
 public:
  explicit LockFile(fs::path path) : path_(std::move(path)) {
    using namespace std::chrono_literals;
    const auto deadline = std::chrono::steady_clock::now() + 60s;
    while (true) {
      const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
      if (fd >= 0) {
        ::close(fd);
        return;
      }
      if (errno != EEXIST || std::chrono::steady_clock::now() > deadline) {
        throw Error(ErrorCode::IoError, "cannot acquire lock " + path_.string());
      }
      std::this_thread::sleep_for(10ms);
    }
  }
  ~LockFile() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  LockFile(const LockFile&) = delete;
  LockFile& operator=(const LockFile&) = delete;

 private:
  fs::path path_;
};

std::string random_suffix() {
  static std::mutex mu;
  static std::mt19937_64 rng(std::random_device{}());
  std::lock_guard lock(mu);
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
  return buf;
}

// Runs fn(i) for i in [0, n) on a small worker pool; rethrows the first error.
template <typename Fn>
void parallel_for(std::size_t n, Fn fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

enum class Detected { Dicom, Nifti, Raster, Unknown };

bool has_suffix(const std::string& name, const std::string& suffix) {
  return name.size() >= suffix.size() &&
         std::equal(suffix.rbegin(), suffix.rend(), name.rbegin(),
                    [](char a, char b) { return std::tolower(static_cast<unsigned char>(a)) == b; });
}

Detected detect(std::span<const std::uint8_t> bytes, const fs::path& path) {
  if (looks_like_dicom(bytes)) return Detected::Dicom;
  if (looks_like_png(bytes)) return Detected::Raster;
  const std::string name = path.filename().string();
  const bool gz = bytes.size() >= 2 && bytes[0] == 0x1F && bytes[1] == 0x8B;
  if (gz) return has_suffix(name, ".nii.gz") ? Detected::Nifti : Detected::Unknown;
  if (looks_like_nifti(bytes) || has_suffix(name, ".nii")) return Detected::Nifti;
  return Detected::Unknown;
}

std::optional<FormatKind> as_format(Detected d) {
  switch (d) {
    case Detected::Dicom: return FormatKind::Dicom;
    case Detected::Nifti: return FormatKind::Nifti;
    case Detected::Raster: return FormatKind::Raster;
    case Detected::Unknown: return std::nullopt;
  }
  return std::nullopt;
}

ExclusionReason reason_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::UnsupportedDepth: return ExclusionReason::UnsupportedDepth;
    case ErrorCode::UnsupportedType: return ExclusionReason::UnsupportedType;
    case ErrorCode::MixedSeries: return ExclusionReason::MixedSeries;
    default: return ExclusionReason::Unreadable;
  }
}

struct Candidate {
  DecodedSeries series;
  IngestReport report;
  std::uint64_t original_bytes = 0;
};

}  // namespace

// JSON ------------------------------------------------------------------------

void to_json(nlohmann::json& j, const ExcludedFile& e) {
  j = {{"path", e.path}, {"reason", std::string(to_string(e.reason))}, {"message", e.message}};
}

void from_json(const nlohmann::json& j, ExcludedFile& e) {
  e.path = j.at("path").get<std::string>();
  e.reason = exclusion_reason_from_string(j.at("reason").get<std::string>());
  e.message = j.value("message", "");
}

void to_json(nlohmann::json& j, const IngestReport& r) {
  j = {{"files_seen", r.files_seen}, {"files_excluded", r.files_excluded},
       {"source_files", r.source_files}};
}

void from_json(const nlohmann::json& j, IngestReport& r) {
  r.files_seen = j.at("files_seen").get<std::size_t>();
  r.files_excluded = j.at("files_excluded").get<std::vector<ExcludedFile>>();
  r.source_files = j.value("source_files", std::vector<std::string>{});
}

void to_json(nlohmann::json& j, const SeriesRecord& r) {
  nlohmann::json slices = nlohmann::json::array();
  for (const auto& s : r.slices) {
    slices.push_back({{"index", s.index},
                      {"file", s.file},
                      {"length", s.length},
                      {"offsets", s.offsets.entries},
                      {"total_length", s.offsets.total_length},
                      {"eoc_offset", s.offsets.eoc_offset}});
  }
  j = {{"series_id", r.series_id},
       {"format", std::string(to_string(r.format))},
       {"num_slices", r.num_slices},
       {"rows", r.rows},
       {"cols", r.cols},
       {"n_levels", r.n_levels},
       {"max_level", r.max_level()},
       {"original_bytes", r.original_bytes},
       {"stored_bytes", r.stored_bytes()},
       {"slices", slices},
       {"ingest_report", r.ingest_report}};
}

void from_json(const nlohmann::json& j, SeriesRecord& r) {
  r.series_id = j.at("series_id").get<std::string>();
  r.format = format_from_string(j.at("format").get<std::string>());
  r.num_slices = j.at("num_slices").get<std::size_t>();
  r.rows = j.at("rows").get<std::size_t>();
  r.cols = j.at("cols").get<std::size_t>();
  r.n_levels = j.at("n_levels").get<int>();
  r.original_bytes = j.at("original_bytes").get<std::uint64_t>();
  r.slices.clear();
  for (const auto& s : j.at("slices")) {
    SliceEntry e;
    e.index = s.at("index").get<std::size_t>();
    e.file = s.at("file").get<std::string>();
    e.length = s.at("length").get<std::uint64_t>();
    e.offsets.entries = s.at("offsets").get<std::vector<TilePartEntry>>();
    e.offsets.total_length = s.at("total_length").get<std::size_t>();
    e.offsets.eoc_offset = s.at("eoc_offset").get<std::size_t>();
    r.slices.push_back(std::move(e));
  }
  r.ingest_report = j.at("ingest_report").get<IngestReport>();
  if (r.slices.size() != r.num_slices) {
    throw Error(ErrorCode::CorruptData, "manifest slice count disagrees with num_slices");
  }
}

std::uint64_t SeriesRecord::stored_bytes() const {
  std::uint64_t total = 0;
  for (const auto& s : slices) total += s.length;
  return total;
}

std::uint64_t SeriesRecord::prefix_bytes(int level) const {
  std::uint64_t total = 0;
  for (const auto& s : slices) total += prefix_length(s.offsets, level);
  return total;
}

double percent_change(double value, double reference) noexcept {
  return reference == 0.0 ? 0.0 : (value - reference) / reference * 100.0;
}

std::string series_hash(const DecodedSeries& series) {
  detail::Sha256 h;
  for (const auto& p : series.slices) {
    std::uint8_t head[17];
    for (int i = 0; i < 8; ++i) head[i] = static_cast<std::uint8_t>(p.rows >> (8 * i));
    for (int i = 0; i < 8; ++i) head[8 + i] = static_cast<std::uint8_t>(p.cols >> (8 * i));
    head[16] = static_cast<std::uint8_t>(p.bit_depth);
    h.update(std::span<const std::uint8_t>(head, sizeof head));
    h.update(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(p.samples.data()),
                                           p.samples.size() * sizeof(std::uint16_t)));
    h.update(std::to_string(p.rescale_intercept));
  }
  h.update(nlohmann::json(series.metadata).dump());
  return h.hex_digest();
}

// Store -----------------------------------------------------------------------

Store Store::init(const fs::path& root) {
  fs::create_directories(root / "series");
  fs::create_directories(root / "locks");
  fs::create_directories(root / "tmp");
  if (!fs::exists(root / kMarker)) {
    write_text(root / kMarker, nlohmann::json{{"layout", "mist-store"}, {"version", 1}}.dump(2) + "\n");
  }
  return Store(root);
}

Store Store::open(const fs::path& root) {
  if (!fs::exists(root / kMarker)) {
    throw Error(ErrorCode::NotFound, "no store at " + root.string() + " (run init first)");
  }
  return Store(root);
}

fs::path Store::series_dir(const std::string& series_id) const {
  return root_ / "series" / series_id;
}

bool Store::contains(const std::string& series_id) const {
  return valid_id(series_id) && fs::exists(series_dir(series_id) / "manifest.json");
}

std::vector<std::string> Store::list() const {
  std::vector<std::string> ids;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(root_ / "series", ec)) {
    const std::string id = entry.path().filename().string();
    if (contains(id)) ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::string Store::manifest_text(const std::string& series_id) const {
  if (!contains(series_id)) throw Error(ErrorCode::NotFound, "unknown series " + series_id);
  return read_text(series_dir(series_id) / "manifest.json");
}

SeriesRecord Store::record(const std::string& series_id) const {
  return nlohmann::json::parse(manifest_text(series_id)).get<SeriesRecord>();
}

MetadataDocument Store::metadata(const std::string& series_id) const {
  if (!contains(series_id)) throw Error(ErrorCode::NotFound, "unknown series " + series_id);
  return nlohmann::json::parse(read_text(series_dir(series_id) / "metadata.json"))
      .get<MetadataDocument>();
}

std::vector<std::uint8_t> Store::get_slice_prefix(const std::string& series_id, std::size_t k,
                                                  int level) const {
  const SeriesRecord rec = record(series_id);
  if (k >= rec.slices.size()) {
    throw Error(ErrorCode::NotFound, "slice " + std::to_string(k) + " not in series " + series_id);
  }
  const std::size_t n = prefix_length(rec.slices[k].offsets, level);
  std::ifstream in(series_dir(series_id) / rec.slices[k].file, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open slice " + std::to_string(k));
  std::vector<std::uint8_t> out(n);
  in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw Error(ErrorCode::IoError, "slice file shorter than its manifest");
  }
  return out;
}

std::vector<std::uint8_t> Store::read_codestream(const std::string& series_id, std::size_t k) const {
  const SeriesRecord rec = record(series_id);
  if (k >= rec.slices.size()) {
    throw Error(ErrorCode::NotFound, "slice " + std::to_string(k) + " not in series " + series_id);
  }
  return read_file_bytes(series_dir(series_id) / rec.slices[k].file);
}

FetchedSeries Store::fetch(const std::string& series_id, std::optional<int> level) const {
  FetchedSeries out;
  out.record = record(series_id);
  const SeriesRecord& rec = out.record;
  out.level = level.value_or(rec.max_level());
  if (out.level < 1 || out.level > rec.max_level()) {
    throw Error(ErrorCode::LevelOutOfRange, "level " + std::to_string(out.level) + " outside [1, " +
                                                std::to_string(rec.max_level()) + "]");
  }
  const MetadataDocument meta = metadata(series_id);
  out.series.metadata = rescale_geometry(meta, rec.n_levels, out.level);
  out.series.slices.resize(rec.num_slices);
  std::vector<std::uint64_t> read(rec.num_slices, 0);
  parallel_for(rec.num_slices, [&](std::size_t k) {
    const auto prefix = get_slice_prefix(series_id, k, out.level);
    read[k] = prefix.size();
    out.series.slices[k] = decode(prefix, DecodeLevel::at(out.level));
  });
  for (auto b : read) out.bytes_read += b;
  return out;
}

void Store::append_log(const nlohmann::json& line) const {
  std::ofstream out(root_ / "ingest_log.jsonl", std::ios::app | std::ios::binary);
  out << line.dump() << "\n";
  if (!out) throw Error(ErrorCode::IoError, "cannot append to ingest log");
}

SeriesRecord Store::commit(const DecodedSeries& series, const IngestReport& report,
                           std::uint64_t original_bytes) {
  check_series(series);
  const std::string id = series_hash(series);
  if (contains(id)) return record(id);

  LockFile lock(root_ / "locks" / (id + ".lock"));
  if (contains(id)) return record(id);

  SeriesRecord rec;
  rec.series_id = id;
  rec.format = series.metadata.format;
  rec.num_slices = series.slices.size();
  rec.rows = series.slices.front().rows;
  rec.cols = series.slices.front().cols;
  rec.n_levels = decomposition_levels(rec.rows, rec.cols);
  rec.original_bytes = original_bytes;
  rec.ingest_report = report;
  rec.slices.resize(rec.num_slices);

  const fs::path tmp = root_ / "tmp" / (id + "." + random_suffix());
  fs::create_directories(tmp / "slices");
  try {
    parallel_for(rec.num_slices, [&](std::size_t k) {
      const Codestream cs = encode(series.slices[k]);
      SliceEntry& e = rec.slices[k];
      e.index = k;
      e.file = slice_file(k);
      e.length = cs.bytes.size();
      e.offsets = build_offset_table(cs);
      write_file_bytes(tmp / e.file, cs.bytes);
    });
    write_text(tmp / "metadata.json", nlohmann::json(series.metadata).dump(2) + "\n");
    write_text(tmp / "manifest.json", nlohmann::json(rec).dump(2) + "\n");
    fs::rename(tmp, series_dir(id));
  } catch (...) {
    std::error_code ec;
    fs::remove_all(tmp, ec);
    throw;
  }
  return rec;
}

IngestResult Store::ingest(const fs::path& input, std::optional<FormatKind> hint) {
  if (!fs::exists(input)) throw Error(ErrorCode::IoError, "no such path " + input.string());
  std::vector<fs::path> files;
  if (fs::is_directory(input)) {
    for (const auto& entry : fs::recursive_directory_iterator(input)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(input);
  }

  IngestResult result;
  result.report.files_seen = files.size();
  auto exclude = [&](const fs::path& p, ExclusionReason reason, std::string message) {
    result.report.files_excluded.push_back({p.string(), reason, std::move(message)});
  };

  std::vector<Candidate> candidates;
  std::map<std::string, std::vector<DicomInstance>> dicom_groups;
  std::map<std::string, std::uint64_t> sizes;

  for (const auto& path : files) {
    std::vector<std::uint8_t> bytes;
    try {
      bytes = read_file_bytes(path);
    } catch (const Error& e) {
      exclude(path, ExclusionReason::Unreadable, e.what());
      continue;
    }
    sizes[path.string()] = bytes.size();
    const Detected kind = detect(bytes, path);
    const auto format = as_format(kind);
    if (!format || (hint && *hint != *format)) {
      exclude(path, ExclusionReason::UnsupportedFormat,
              format ? "not " + std::string(to_string(*hint)) : "unrecognised file format");
      continue;
    }
    try {
      switch (*format) {
        case FormatKind::Dicom: {
          DicomInstance inst = parse_dicom(bytes, path);
          dicom_groups[inst.series_uid].push_back(std::move(inst));
          break;
        }
        case FormatKind::Nifti: {
          std::string stem = path.filename().string();
          stem = stem.substr(0, stem.find(".nii"));
          Candidate c{parse_nifti(bytes, stem), {}, bytes.size()};
          c.report.files_seen = 1;
          c.report.source_files = {path.string()};
          candidates.push_back(std::move(c));
          break;
        }
        case FormatKind::Raster: {
          Candidate c{parse_png(bytes, path.stem().string()), {}, bytes.size()};
          c.report.files_seen = 1;
          c.report.source_files = {path.string()};
          candidates.push_back(std::move(c));
          break;
        }
      }
    } catch (const ExcludedError& e) {
      exclude(path, e.reason(), e.what());
    } catch (const Error& e) {
      exclude(path, reason_for(e), e.what());
    }
  }

  for (auto& [uid, instances] : dicom_groups) {
    Candidate c;
    // Files whose dims differ from the majority do not belong to the series.
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> votes;
    for (const auto& i : instances) ++votes[{i.rows, i.cols}];
    const auto majority =
        std::max_element(votes.begin(), votes.end(),
                         [](const auto& a, const auto& b) { return a.second < b.second; })
            ->first;
    std::vector<DicomInstance> kept;
    for (auto& i : instances) {
      c.report.files_seen += 1;
      if (std::make_pair(i.rows, i.cols) != majority) {
        ExcludedFile ex{i.path.string(), ExclusionReason::MixedSeries,
                        "dims " + std::to_string(i.rows) + "x" + std::to_string(i.cols) +
                            " differ from the rest of series " + uid};
        c.report.files_excluded.push_back(ex);
        result.report.files_excluded.push_back(ex);
        continue;
      }
      c.report.source_files.push_back(i.path.string());
      c.original_bytes += sizes[i.path.string()];
      kept.push_back(std::move(i));
    }
    try {
      c.series = assemble_dicom_series(std::move(kept));
      candidates.push_back(std::move(c));
    } catch (const Error& e) {
      for (const auto& f : c.report.source_files) exclude(f, reason_for(e), e.what());
    }
  }

  const std::set<std::string> before = [&] {
    const auto ids = list();
    return std::set<std::string>(ids.begin(), ids.end());
  }();
  for (const auto& c : candidates) {
    const std::string id = series_hash(c.series);
    if (before.count(id)) result.deduplicated.push_back(id);
    result.series.push_back(commit(c.series, c.report, c.original_bytes));
  }
  result.report.source_files.clear();
  for (const auto& c : candidates) {
    result.report.source_files.insert(result.report.source_files.end(),
                                      c.report.source_files.begin(), c.report.source_files.end());
  }

  nlohmann::json ids = nlohmann::json::array();
  for (const auto& r : result.series) ids.push_back(r.series_id);
  append_log({{"input", input.string()},
              {"files_seen", result.report.files_seen},
              {"files_excluded", result.report.files_excluded},
              {"series", ids}});

  if (result.series.empty()) {
    std::string reasons;
    for (const auto& e : result.report.files_excluded) {
      reasons += "\n  " + e.path + ": " + std::string(to_string(e.reason));
    }
    throw Error(ErrorCode::NothingIngestable,
                "every input file was excluded (" + std::to_string(files.size()) + " seen)" + reasons);
  }
  return result;
}

EfficiencyReport Store::stats() const {
  EfficiencyReport report;
  int depth = 0;
  for (const auto& id : list()) {
    const SeriesRecord rec = record(id);
    SeriesEfficiency s;
    s.series_id = id;
    s.format = rec.format;
    s.num_slices = rec.num_slices;
    s.max_level = rec.max_level();
    s.original_bytes = rec.original_bytes;
    s.stored_bytes = rec.stored_bytes();
    for (int level = 1; level <= rec.max_level(); ++level) s.level_bytes.push_back(rec.prefix_bytes(level));
    report.original_bytes += s.original_bytes;
    report.stored_bytes += s.stored_bytes;
    depth = std::max(depth, s.max_level);
    report.series.push_back(std::move(s));
  }
  report.level_bytes.assign(static_cast<std::size_t>(depth), 0);
  for (const auto& s : report.series) {
    for (int level = 1; level <= depth; ++level) {
      report.level_bytes[static_cast<std::size_t>(level - 1)] +=
          s.level_bytes[static_cast<std::size_t>(std::min(level, s.max_level) - 1)];
    }
  }

  std::set<std::string> seen, excluded;
  std::ifstream log(root_ / "ingest_log.jsonl");
  for (std::string line; std::getline(log, line);) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) continue;
    for (const auto& e : j.value("files_excluded", nlohmann::json::array())) {
      excluded.insert(e.value("path", ""));
    }
  }
  for (const auto& s : report.series) {
    for (const auto& f : record(s.series_id).ingest_report.source_files) seen.insert(f);
  }
  for (const auto& e : excluded) seen.insert(e);
  report.files_seen = seen.size();
  report.files_excluded = excluded.size();
  return report;
}

}  // namespace mist
