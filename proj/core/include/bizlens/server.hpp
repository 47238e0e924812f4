#pragma once

#include <memory>
#include <string>

#include "bizlens/pipeline.hpp"

namespace bizlens {

/// HTTP front end over the query pipeline.
///
///   POST /v1/query     {"query", "ref_date"?, "stream"?} -> Answer JSON or NDJSON
///   GET  /v1/coverage  catalog summary
///   GET  /v1/trends    ?topic=a,b&scale=year&from=YYYY-MM-DD&to=YYYY-MM-DD[&min_match=1&window=5]
///   GET  /health       {"status","dataset_fingerprint","index_fingerprint"}
///
/// Every endpoint except /health answers 503 until a snapshot is installed.
class Server {
 public:
  explicit Server(ServiceConfig config);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Loads a snapshot from the config and installs it atomically.
  void load();
  /// load() on a background thread; failures are logged and the server
  /// stays in the loading state.
  void load_async();
  void install(Snapshot snapshot);
  bool ready() const;

  /// Binds and serves until stop(); returns false when binding fails.
  bool listen(const std::string& host, int port);
  /// Binds to an ephemeral port and returns it (serve with listen_after_bind).
  int bind_any_port(const std::string& host);
  bool listen_after_bind();
  void stop();
  void wait_until_ready_to_accept() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace bizlens
