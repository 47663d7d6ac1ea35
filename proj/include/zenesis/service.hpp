#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "zenesis/backend.hpp"
#include "zenesis/error.hpp"
#include "zenesis/jobs.hpp"
#include "zenesis/session.hpp"

namespace zenesis {

struct ServiceOptions {
  std::filesystem::path data_dir = "zenesis-data";
  BackendDescriptor backend;
  AdaptConfig adapt;
  std::uint64_t max_upload_bytes = 2ull << 30;
  std::size_t workers = 0;  // 0: hardware concurrency
  std::optional<std::filesystem::path> web_root;
};

/// HTTP status for an error code.
int http_status(Errc code);

/// JSON API under /api/v1.
class Service {
 public:
  Service(ServiceOptions options, std::shared_ptr<SegBackend> backend);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds (port 0 picks a free port), serves on a background thread, returns the port.
  int start(const std::string& host = "127.0.0.1", int port = 0);

  /// Serves on the calling thread until stop().
  void listen(const std::string& host, int port);

  void stop();

  int port() const;
  SessionStore& store();
  JobManager& jobs();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace zenesis
