#pragma once

#include "skilladapt/bridge/hub.hpp"
#include "skilladapt/bridge/ws_server.hpp"
#include "skilladapt/engine/runtime.hpp"

namespace skilladapt::bridge {

// Engine + runtime + hub + WebSocket transport, wired together.
class BridgeService {
 public:
  BridgeService(engine::Engine& engine, engine::Runtime& runtime, ServerOptions options);
  ~BridgeService();

  void start();  // BindFailure
  void stop();
  std::uint16_t port() const { return server_.port(); }
  Hub& hub() { return hub_; }

 private:
  engine::Engine& engine_;
  engine::Runtime& runtime_;
  Hub hub_;
  WebSocketServer server_;
};

}  // namespace skilladapt::bridge
