#pragma once

#include <memory>
#include <optional>
#include <string>

#include "qkd/service.hpp"

namespace httplib {
class Server;
}

namespace qkd::service {

// HTTP front end of the demo service. All API paths live under /api/v1/;
// anything else is served from `static_dir` when one is given.
class ApiServer {
 public:
  explicit ApiServer(SessionManager& sessions, std::optional<std::string> static_dir = std::nullopt);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Returns the bound port; port 0 picks a free one. Throws on failure.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void run();
  void stop();

 private:
  SessionManager& sessions_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace qkd::service
