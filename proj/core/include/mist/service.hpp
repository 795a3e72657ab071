#pragma once

// HTTP streaming API over a store.
//
//   GET /v1/series?offset=&limit=
//   GET /v1/series/{id}/manifest
//   GET /v1/series/{id}/image?format=&level=
//   GET /v1/series/{id}/slices/{k}/raw?level=      (honours Range)
//
// Every response carries X-MIST-Bytes-Read: codestream bytes read from disk.
// Errors are application/json {"code", "message"}.

#include "mist/metadata.hpp"
#include "mist/store.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mist {

inline constexpr const char* kBytesReadHeader = "X-MIST-Bytes-Read";

/// A converted series, ready to send or write.
struct Payload {
  std::string content_type;
  std::string filename;
  std::vector<std::uint8_t> body;
  std::uint64_t bytes_read = 0;  // codestream prefix bytes consumed
  int level = 0;
};

/// Shared conversion path behind `mist get` and the image endpoint. The
/// hierarchy and level are checked against the manifest before any
/// codestream byte is read. Throws NotFound, LevelOutOfRange,
/// HierarchyViolation, MissingGeometry.
Payload render_payload(const Store& store, const std::string& series_id,
                       std::optional<FormatKind> target = {}, std::optional<int> level = {});

/// HTTP status for a library error code.
int http_status(ErrorCode code) noexcept;

struct ListenAddress {
  std::string host = "127.0.0.1";
  int port = 8080;
};

/// "host:port", ":port", or "port". Throws InvalidArgument.
ListenAddress parse_listen(const std::string& text);

class Server {
 public:
  explicit Server(Store store);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds the socket; port 0 picks a free port. Returns the bound port.
  /// Throws IoError when the address is unavailable.
  int bind(const ListenAddress& address);
  /// Serves until stop(); bind() first.
  void run();
  /// bind() + run() on a background thread; returns the bound port.
  int start(const ListenAddress& address);
  void stop();
  int port() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace mist
