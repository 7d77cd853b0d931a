#pragma once

#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>

#include "skilladapt/bridge/envelope.hpp"
#include "skilladapt/engine/runtime.hpp"

namespace skilladapt::bridge {

inline constexpr std::size_t kTopicQueueDepth = 64;

// Routes envelopes between clients and the runtime, independent of the
// transport. Each client has an unbounded response queue (bounded by its own
// requests) and a topic queue of fixed depth that drops its oldest entry.
class Hub {
 public:
  using ClientId = std::uint64_t;
  // (service, payload, completion); completion may run on any thread.
  using Dispatcher = std::function<void(const std::string&, const json&, std::function<void(engine::CallResult)>)>;

  explicit Hub(Dispatcher dispatcher, std::size_t topic_depth = kTopicQueueDepth);

  // `wake` is called (without the hub lock) whenever the client has output.
  ClientId connect(std::function<void()> wake);
  void disconnect(ClientId id);

  void on_message(ClientId id, std::string_view text);
  // UnknownTopic for names outside the topic table. Never blocks on clients.
  void publish(std::string_view topic, const json& payload);

  std::optional<std::string> pop(ClientId id);
  std::uint64_t dropped(ClientId id) const;
  std::size_t client_count() const;

  static json inventory();

 private:
  struct Client {
    std::function<void()> wake;
    std::deque<std::string> responses;
    std::deque<std::string> topics;
    std::set<std::string, std::less<>> subscriptions;
    std::uint64_t dropped = 0;
  };

  void respond(ClientId id, const Envelope& e);

  Dispatcher dispatcher_;
  std::size_t depth_;
  mutable std::mutex mutex_;
  std::map<ClientId, Client> clients_;
  ClientId next_id_ = 1;
  std::int64_t publish_seq_ = 0;
};

}  // namespace skilladapt::bridge
