// mist: operator entry points for the progressive image store.
//
// Exit codes: 0 success, 1 usage or I/O, 2 nothing ingestable,
// 3 hierarchy violation.

#include "mist/error.hpp"
#include "mist/quality.hpp"
#include "mist/report.hpp"
#include "mist/service.hpp"
#include "mist/store.hpp"
#include "mist/vectors.hpp"

#include <CLI11.hpp>

#include <pthread.h>

#include <algorithm>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

namespace fs = std::filesystem;

enum Exit { kOk = 0, kUsage = 1, kNothingIngestable = 2, kHierarchy = 3 };

int exit_code_for(mist::ErrorCode code) {
  switch (code) {
    case mist::ErrorCode::NothingIngestable: return kNothingIngestable;
    case mist::ErrorCode::HierarchyViolation: return kHierarchy;
    default: return kUsage;
  }
}

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : std::move(fallback);
}

std::optional<int> parse_level(const std::string& text) {
  if (text.empty() || text == "full" || text == "FULL") return std::nullopt;
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || used == 0) {
    throw mist::Error(mist::ErrorCode::InvalidArgument, "level must be an integer or 'full'");
  }
  return v;
}

int cmd_init(const std::string& store_path) {
  const auto store = mist::Store::init(store_path);
  std::cout << "initialised store at " << store.root().string() << "\n";
  return kOk;
}

int cmd_ingest(const std::string& store_path, const std::string& input, const std::string& format) {
  auto store = mist::Store::open(store_path);
  std::optional<mist::FormatKind> hint;
  if (!format.empty()) hint = mist::format_from_string(format);
  const auto result = store.ingest(input, hint);
  for (const auto& s : result.series) {
    const bool dup = std::find(result.deduplicated.begin(), result.deduplicated.end(), s.series_id) !=
                     result.deduplicated.end();
    std::cout << s.series_id << "  " << mist::to_string(s.format) << "  " << s.num_slices
              << (s.num_slices == 1 ? " slice" : " slices") << "  " << s.rows << "x" << s.cols
              << "  levels 1-" << s.max_level() << (dup ? "  (already stored)" : "") << "\n";
  }
  for (const auto& e : result.report.files_excluded) {
    std::cout << "excluded " << e.path << ": " << mist::to_string(e.reason) << " (" << e.message << ")\n";
  }
  std::cout << result.report.files_seen << " files seen, " << result.report.files_excluded.size()
            << " excluded, " << result.series.size() << " series\n";
  return kOk;
}

int cmd_get(const std::string& store_path, const std::string& id, const std::string& format,
            const std::string& level, const std::string& out) {
  const auto store = mist::Store::open(store_path);
  const mist::Payload p =
      mist::render_payload(store, id, mist::format_from_string(format), parse_level(level));
  fs::path target = out;
  if (fs::is_directory(target)) target /= p.filename;
  mist::write_file_bytes(target, p.body);
  std::cout << target.string() << "  " << p.body.size() << " bytes  level " << p.level << "  "
            << p.bytes_read << " codestream bytes read\n";
  return kOk;
}

int cmd_report(const std::string& store_path, bool per_level, bool csv) {
  const auto store = mist::Store::open(store_path);
  std::cout << mist::render_efficiency(store.stats(), csv, per_level);
  return kOk;
}

int cmd_quality(const std::string& store_path, const std::string& id, bool csv) {
  const auto store = mist::Store::open(store_path);
  if (!id.empty()) {
    std::cout << mist::render_quality(mist::evaluate_series(store, id), csv);
    return kOk;
  }
  std::vector<mist::QualityReport> reports;
  for (const auto& sid : store.list()) reports.push_back(mist::evaluate_series(store, sid));
  std::cout << mist::render_quality(mist::merge_reports(reports), csv);
  return kOk;
}

int cmd_serve(const std::string& store_path, const std::string& listen) {
  const mist::ListenAddress address = mist::parse_listen(listen);
  // Block termination signals before any thread starts so only sigwait sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  mist::Server server(mist::Store::open(store_path));
  const int port = server.start(address);
  std::cout << "listening on " << address.host << ":" << port << std::endl;
  int received = 0;
  sigwait(&signals, &received);
  server.stop();
  std::cout << "stopped" << std::endl;
  return kOk;
}

int cmd_vectors(const std::string& store_path, const std::string& out, bool from_store) {
  auto planes = mist::default_vector_planes();
  if (from_store) {
    const auto store = mist::Store::open(store_path);
    for (const auto& id : store.list()) {
      planes.push_back({"store_" + id.substr(0, 16), mist::decode(store.read_codestream(id, 0))});
    }
  }
  const std::size_t files = mist::write_test_vectors(out, planes);
  std::cout << planes.size() << " vectors, " << files << " files written to " << out << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Progressive medical image store"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string store_path = env_or("MIST_STORE", "");
  app.add_option("--store", store_path, "Store directory (env MIST_STORE)");

  auto* init = app.add_subcommand("init", "Create an empty store");

  std::string input, format_hint;
  auto* ingest = app.add_subcommand("ingest", "Ingest a file or directory");
  ingest->add_option("path", input, "Input file or directory")->required();
  ingest->add_option("--format", format_hint, "Only accept this source format (dicom, nifti, raster)");

  std::string id, target_format, level, out;
  auto* get = app.add_subcommand("get", "Write a series at a format and level");
  get->add_option("id", id, "Series id")->required();
  get->add_option("--format", target_format, "dicom, nifti, or raster")->required();
  get->add_option("--level", level, "1..max, or full (default)");
  get->add_option("-o,--output", out, "Output file or directory")->required();

  bool per_level = false, csv = false;
  auto* report = app.add_subcommand("report", "Storage and transmission statistics");
  report->add_flag("--per-level", per_level, "Add cumulative bytes per decomposition level");
  report->add_flag("--csv", csv, "Emit CSV");

  std::string quality_id;
  bool quality_csv = false;
  auto* quality = app.add_subcommand("quality", "SSIM/PSNR per level for a series (all when omitted)");
  quality->add_option("id", quality_id, "Series id");
  quality->add_flag("--csv", quality_csv, "Emit CSV");

  std::string listen = env_or("MIST_LISTEN", "127.0.0.1:8080");
  auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
  serve->add_option("--listen", listen, "ADDR:PORT (env MIST_LISTEN)");

  std::string vectors_out;
  bool vectors_from_store = false;
  auto* vectors = app.add_subcommand("vectors", "Export the codec test-vector corpus");
  vectors->add_option("out", vectors_out, "Output directory")->required();
  vectors->add_flag("--from-store", vectors_from_store, "Also export the first slice of each stored series");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  const bool needs_store = !vectors->parsed() || vectors_from_store;
  if (needs_store && store_path.empty()) {
    std::cerr << "error: --store or MIST_STORE is required\n";
    return kUsage;
  }

  try {
    if (init->parsed()) return cmd_init(store_path);
    if (ingest->parsed()) return cmd_ingest(store_path, input, format_hint);
    if (get->parsed()) return cmd_get(store_path, id, target_format, level, out);
    if (report->parsed()) return cmd_report(store_path, per_level, csv);
    if (quality->parsed()) return cmd_quality(store_path, quality_id, quality_csv);
    if (serve->parsed()) return cmd_serve(store_path, listen);
    if (vectors->parsed()) return cmd_vectors(store_path, vectors_out, vectors_from_store);
  } catch (const mist::Error& e) {
    std::cerr << "error: " << mist::to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
