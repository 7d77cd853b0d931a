#include "skilladapt/bridge/service.hpp"

namespace skilladapt::bridge {

BridgeService::BridgeService(engine::Engine& engine, engine::Runtime& runtime, ServerOptions options)
    : engine_(engine),
      runtime_(runtime),
      hub_([&runtime](const std::string& service, const json& payload, std::function<void(engine::CallResult)> done) {
        runtime.submit(service, payload, std::move(done));
      }),
      server_(hub_, std::move(options)) {
  engine_.set_publisher([this](std::string_view topic, const json& payload) { hub_.publish(topic, payload); });
}

BridgeService::~BridgeService() { stop(); }

void BridgeService::start() {
  server_.start();
  runtime_.start();
}

void BridgeService::stop() {
  runtime_.stop();
  server_.stop();
  engine_.set_publisher(nullptr);
}

}  // namespace skilladapt::bridge
