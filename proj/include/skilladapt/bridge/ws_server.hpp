#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "skilladapt/bridge/hub.hpp"

namespace skilladapt::bridge {

struct ServerOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 9090;  // 0 picks a free port
  int heartbeat_seconds = 5;
};

// JSON-over-WebSocket transport for a Hub; one text frame per envelope.
class WebSocketServer {
 public:
  WebSocketServer(Hub& hub, ServerOptions options);
  ~WebSocketServer();

  // Binds and starts the I/O thread. Throws BindFailure.
  void start();
  void stop();
  std::uint16_t port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace skilladapt::bridge
