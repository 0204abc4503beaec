#pragma once

// HTTP/JSON API under /api/v1: knowledge bases, interruptible query
// sessions, answers, table dump, log analyses and justification. Serves the
// web UI bundle as static files when a UI directory is configured.

#include <memory>
#include <string>

namespace httplib {
class Server;
}

namespace silk {

struct ServiceConfig {
  std::string data_dir = "silk-data";
  std::string ui_dir;  // empty: no static UI
};

class Service {
 public:
  explicit Service(ServiceConfig cfg);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Registers the routes on `server`.
  void mount(httplib::Server& server);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Runs the service until the process is stopped. Returns 1 when the port
/// cannot be bound.
int serve(const ServiceConfig& cfg, const std::string& host, int port);

}  // namespace silk
