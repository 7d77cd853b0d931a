#pragma once

#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <mutex>
#include <thread>
#include <vector>

#include "skilladapt/engine/engine.hpp"

namespace skilladapt::engine {

// Result of one service call: payload on success, code + message otherwise.
struct CallResult {
  bool ok = true;
  json payload;
  ErrorCode code = ErrorCode::InvalidArgument;
  std::string message;
};

// Serializes all engine access onto one loop thread that also advances the
// simulation in wall-clock time (scaled by `speed`).
class Runtime {
 public:
  struct Options {
    double speed = 1.0;       // simulated seconds per wall second
    int max_steps_per_tick = 400;
  };

  Runtime(Engine& engine, Options options);
  explicit Runtime(Engine& engine) : Runtime(engine, Options{}) {}
  ~Runtime();

  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  void start();
  void stop();

  // `done` runs on the loop thread (or the language worker).
  void submit(std::string service, json payload, std::function<void(CallResult)> done);
  std::future<CallResult> submit(std::string service, json payload);
  // Runs `fn` on the loop thread and waits. Throws Aborted once stopped.
  void run_sync(const std::function<void()>& fn);

 private:
  void loop();
  void post(std::function<void()> task);
  CallResult invoke(const std::string& service, const json& payload);
  CallResult start_query(const json& payload);

  Engine& engine_;
  Options options_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> tasks_;
  bool running_ = false;
  bool stopped_ = false;
  std::thread thread_;
  std::mutex workers_mutex_;
  std::vector<std::thread> workers_;
};

}  // namespace skilladapt::engine
