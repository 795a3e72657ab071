#include "mist/service.hpp"

#include "mist/error.hpp"
#include "mist/formats.hpp"
#include "mist/hierarchy.hpp"
#include "zip.hpp"

#include <httplib.h>

#include <charconv>
#include <thread>

namespace mist {
namespace {

std::optional<int> parse_int(const std::string& text) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

std::optional<int> level_param(const httplib::Request& req) {
  if (!req.has_param("level")) return std::nullopt;
  const std::string text = req.get_param_value("level");
  if (text.empty() || text == "full" || text == "FULL") return std::nullopt;
  const auto v = parse_int(text);
  if (!v) throw Error(ErrorCode::InvalidArgument, "level must be an integer or 'full'");
  return v;
}

void send_json(httplib::Response& res, const nlohmann::json& body, std::uint64_t bytes_read = 0) {
  res.set_header(kBytesReadHeader, std::to_string(bytes_read));
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  res.status = http_status(code);
  res.set_header(kBytesReadHeader, "0");
  res.set_content(nlohmann::json{{"code", std::string(to_string(code))}, {"message", message}}.dump(),
                  "application/json");
}

// Runs a route body, translating library errors into JSON error responses.
template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
    } catch (const std::exception& e) {
      send_error(res, ErrorCode::IoError, e.what());
    }
  };
}

constexpr std::size_t kDefaultPageSize = 100;

std::string short_id(const std::string& id) { return id.substr(0, 16); }

}  // namespace

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::InvalidArgument:
    case ErrorCode::LevelOutOfRange: return 400;
    case ErrorCode::HierarchyViolation:
    case ErrorCode::MissingGeometry: return 409;
    default: return 500;
  }
}

Payload render_payload(const Store& store, const std::string& series_id,
                       std::optional<FormatKind> target, std::optional<int> level) {
  const SeriesRecord rec = store.record(series_id);
  const FormatKind format = target.value_or(rec.format);
  require_convertible(rec.format, format);
  const int lvl = level.value_or(rec.max_level());
  if (lvl < 1 || lvl > rec.max_level()) {
    throw Error(ErrorCode::LevelOutOfRange, "level " + std::to_string(lvl) + " outside [1, " +
                                                std::to_string(rec.max_level()) + "]");
  }
  if (format == FormatKind::Nifti && rec.format == FormatKind::Dicom) {
    const MetadataDocument meta = map_tags(store.metadata(series_id), FormatKind::Nifti);
    if (!meta.affine) {
      throw Error(ErrorCode::MissingGeometry, "series has no position/orientation for a NIfTI affine");
    }
  }

  const FetchedSeries fetched = store.fetch(series_id, lvl);
  auto files = export_series(fetched.series, format);

  Payload p;
  p.bytes_read = fetched.bytes_read;
  p.level = lvl;
  const std::string stem = short_id(series_id) + "_L" + std::to_string(lvl);
  if (files.size() == 1 && format != FormatKind::Dicom) {
    p.content_type = format == FormatKind::Nifti ? "application/octet-stream" : "image/png";
    p.filename = stem + (format == FormatKind::Nifti ? ".nii" : ".png");
    p.body = std::move(files.front().bytes);
  } else {
    p.content_type = "application/zip";
    p.filename = stem + (format == FormatKind::Dicom ? "_dicom.zip" : "_png.zip");
    p.body = detail::zip_stored(files);
  }
  return p;
}

ListenAddress parse_listen(const std::string& text) {
  ListenAddress a;
  std::string port = text;
  if (const auto colon = text.rfind(':'); colon != std::string::npos) {
    if (colon > 0) a.host = text.substr(0, colon);
    port = text.substr(colon + 1);
  }
  const auto p = parse_int(port);
  if (!p || *p < 0 || *p > 65535) {
    throw Error(ErrorCode::InvalidArgument, "invalid listen address '" + text + "'");
  }
  a.port = *p;
  return a;
}

struct Server::Impl {
  explicit Impl(Store s) : store(std::move(s)) {}
  Store store;
  httplib::Server http;
  std::thread worker;
  int port = -1;
};

Server::Server(Store store) : impl_(std::make_unique<Impl>(std::move(store))) {
  auto& http = impl_->http;
  const Store* store_ptr = &impl_->store;
  // Exclusive binding so a second server on the same port fails loudly.
  http.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof yes);
  });

  http.Get("/v1/series", guarded([store_ptr](const httplib::Request& req, httplib::Response& res) {
    const auto ids = store_ptr->list();
    std::size_t offset = 0, limit = kDefaultPageSize;
    if (req.has_param("offset")) {
      const auto v = parse_int(req.get_param_value("offset"));
      if (!v || *v < 0) throw Error(ErrorCode::InvalidArgument, "offset must be a non-negative integer");
      offset = static_cast<std::size_t>(*v);
    }
    if (req.has_param("limit")) {
      const auto v = parse_int(req.get_param_value("limit"));
      if (!v || *v < 0) throw Error(ErrorCode::InvalidArgument, "limit must be a non-negative integer");
      limit = static_cast<std::size_t>(*v);
    }
    nlohmann::json series = nlohmann::json::array();
    for (std::size_t i = offset; i < ids.size() && i - offset < limit; ++i) {
      const SeriesRecord rec = store_ptr->record(ids[i]);
      series.push_back({{"series_id", rec.series_id},
                        {"format", std::string(to_string(rec.format))},
                        {"num_slices", rec.num_slices},
                        {"rows", rec.rows},
                        {"cols", rec.cols},
                        {"max_level", rec.max_level()}});
    }
    send_json(res, {{"total", ids.size()}, {"offset", offset}, {"limit", limit}, {"series", series}});
  }));

  http.Get(R"(/v1/series/([^/]+)/manifest)",
           guarded([store_ptr](const httplib::Request& req, httplib::Response& res) {
             res.set_header(kBytesReadHeader, "0");
             res.set_content(store_ptr->manifest_text(req.matches[1]), "application/json");
           }));

  http.Get(R"(/v1/series/([^/]+)/image)",
           guarded([store_ptr](const httplib::Request& req, httplib::Response& res) {
             std::optional<FormatKind> format;
             if (req.has_param("format")) format = format_from_string(req.get_param_value("format"));
             const Payload p = render_payload(*store_ptr, req.matches[1], format, level_param(req));
             res.set_header(kBytesReadHeader, std::to_string(p.bytes_read));
             res.set_header("Content-Disposition", "attachment; filename=\"" + p.filename + "\"");
             res.set_content(std::string(p.body.begin(), p.body.end()), p.content_type);
           }));

  http.Get(R"(/v1/series/([^/]+)/slices/([^/]+)/raw)",
           guarded([store_ptr](const httplib::Request& req, httplib::Response& res) {
             const std::string id = req.matches[1];
             const auto k = parse_int(req.matches[2]);
             if (!k || *k < 0) throw Error(ErrorCode::NotFound, "no slice '" + std::string(req.matches[2]) + "'");
             const SeriesRecord rec = store_ptr->record(id);
             const int level = level_param(req).value_or(rec.max_level());
             const auto bytes = store_ptr->get_slice_prefix(id, static_cast<std::size_t>(*k), level);
             res.set_header(kBytesReadHeader, std::to_string(bytes.size()));
             res.set_header("Accept-Ranges", "bytes");
             // Range slicing (206/416) is applied by the HTTP layer.
             res.set_content(std::string(bytes.begin(), bytes.end()), "application/octet-stream");
           }));

  http.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      const ErrorCode code = res.status == 416 ? ErrorCode::InvalidArgument : ErrorCode::NotFound;
      const int status = res.status;
      send_error(res, code, status == 416 ? "range not satisfiable" : "no such route");
      res.status = status;
    }
  });
}

Server::~Server() { stop(); }

int Server::bind(const ListenAddress& address) {
  auto& http = impl_->http;
  if (address.port == 0) {
    impl_->port = http.bind_to_any_port(address.host);
  } else {
    impl_->port = http.bind_to_port(address.host, address.port) ? address.port : -1;
  }
  if (impl_->port < 0) {
    throw Error(ErrorCode::IoError,
                "cannot listen on " + address.host + ":" + std::to_string(address.port));
  }
  return impl_->port;
}

void Server::run() { impl_->http.listen_after_bind(); }

int Server::start(const ListenAddress& address) {
  const int port = bind(address);
  impl_->worker = std::thread([this] { run(); });
  impl_->http.wait_until_ready();
  return port;
}

void Server::stop() {
  if (!impl_) return;
  impl_->http.stop();
  if (impl_->worker.joinable()) impl_->worker.join();
}

int Server::port() const noexcept { return impl_->port; }

}  // namespace mist
