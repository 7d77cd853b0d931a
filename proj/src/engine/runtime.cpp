#include "skilladapt/engine/runtime.hpp"

#include <chrono>
#include <cmath>

namespace skilladapt::engine {

namespace {

CallResult failure(const Error& e) { return {false, nullptr, e.code(), e.what()}; }

// Forwards tool calls from the language worker onto the loop thread.
class QueuedTarget : public gateway::ToolTarget {
 public:
  QueuedTarget(Runtime& rt, Engine& engine) : rt_(rt), engine_(engine) {}

  std::vector<int> add_via_point(double time, const Vector3d& pos) override {
    std::vector<int> ids;
    rt_.run_sync([&] { ids = engine_.add_via_point(time, pos); });
    return ids;
  }
  std::vector<int> add_repulsion(const Vector3d& center, double radius) override {
    std::vector<int> ids;
    rt_.run_sync([&] { ids = engine_.add_repulsion(center, radius); });
    return ids;
  }
  void time_scale(double p, double t0, double t1, kmp::ScaleMode mode) override {
    rt_.run_sync([&] { engine_.time_scale(p, t0, t1, mode); });
  }
  void set_velocity(double v) override {
    rt_.run_sync([&] { engine_.set_velocity(v); });
  }
  void set_force(double f) override {
    rt_.run_sync([&] { engine_.set_force(f); });
  }
  void set_stiffness(double k) override {
    rt_.run_sync([&] { engine_.set_stiffness(k); });
  }
  void set_exec_state(std::string_view cmd) override {
    rt_.run_sync([&] { engine_.set_exec_state(cmd); });
  }

 private:
  Runtime& rt_;
  Engine& engine_;
};

}  // namespace

Runtime::Runtime(Engine& engine, Options options) : engine_(engine), options_(options) {}

Runtime::~Runtime() { stop(); }

void Runtime::start() {
  std::lock_guard lock(mutex_);
  if (running_ || stopped_) return;
  running_ = true;
  thread_ = std::thread([this] { loop(); });
}

void Runtime::stop() {
  {
    std::lock_guard lock(mutex_);
    if (!running_) {
      stopped_ = true;
      return;
    }
    running_ = false;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(workers_mutex_);
    workers.swap(workers_);
  }
  for (auto& w : workers) w.join();
}

void Runtime::post(std::function<void()> task) {
  {
    std::lock_guard lock(mutex_);
    if (stopped_) throw Error(ErrorCode::Aborted, "runtime is stopped");
    tasks_.push_back(std::move(task));
  }
  cv_.notify_one();
}

void Runtime::run_sync(const std::function<void()>& fn) {
  if (thread_.get_id() == std::this_thread::get_id()) {
    fn();
    return;
  }
  auto done = std::make_shared<std::promise<void>>();
  auto fut = done->get_future();
  post([fn, done] {
    try {
      fn();
      done->set_value();
    } catch (...) {
      done->set_exception(std::current_exception());
    }
  });
  fut.get();
}

CallResult Runtime::invoke(const std::string& service, const json& payload) {
  try {
    if (service == "set_llm_input_query") return start_query(payload);
    return {true, engine_.call(service, payload), ErrorCode::InvalidArgument, {}};
  } catch (const Error& e) {
    return failure(e);
  } catch (const std::exception& e) {
    return {false, nullptr, ErrorCode::BadPayload, e.what()};
  }
}

CallResult Runtime::start_query(const json& payload) {
  if (!payload.is_object() || !payload.contains("text") || !payload["text"].is_string()) {
    throw Error(ErrorCode::BadPayload, "'text' must be a string");
  }
  auto text = payload["text"].get<std::string>();
  const int id = engine_.llm().begin(text);
  json context = payload.value("context", engine_.context_json());
  std::lock_guard lock(workers_mutex_);
  workers_.emplace_back([this, id, text = std::move(text), context = std::move(context)] {
    QueuedTarget target(*this, engine_);
    const auto note = engine_.llm().run(id, text, target, context);
    // Publish from the loop thread so topic order follows engine order.
    try {
      post([this, note] { engine_.publish("llm_notification", note); });
    } catch (const Error&) {
      // stopped meanwhile
    }
  });
  return {true, {{"query_id", id}}, ErrorCode::InvalidArgument, {}};
}

void Runtime::submit(std::string service, json payload, std::function<void(CallResult)> done) {
  post([this, service = std::move(service), payload = std::move(payload), done = std::move(done)] {
    auto r = invoke(service, payload);
    if (done) done(std::move(r));
  });
}

std::future<CallResult> Runtime::submit(std::string service, json payload) {
  auto p = std::make_shared<std::promise<CallResult>>();
  auto fut = p->get_future();
  try {
    submit(std::move(service), std::move(payload), [p](CallResult r) { p->set_value(std::move(r)); });
  } catch (const Error& e) {
    p->set_value(failure(e));
  }
  return fut;
}

void Runtime::loop() {
  using clock = std::chrono::steady_clock;
  const double dt = 1.0 / engine_.config().execution.rate_hz;
  const auto period = std::chrono::duration<double>(dt / options_.speed);
  auto last = clock::now();
  double owed = 0.0;  // simulated seconds not yet stepped
  for (;;) {
    std::deque<std::function<void()>> batch;
    {
      std::unique_lock lock(mutex_);
      cv_.wait_for(lock, std::chrono::duration_cast<clock::duration>(period), [&] { return !tasks_.empty() || !running_; });
      batch.swap(tasks_);
      if (!running_) {
        stopped_ = true;
        lock.unlock();
        for (auto& t : batch) t();
        return;
      }
    }
    for (auto& t : batch) t();
    const auto now = clock::now();
    if (engine_.active()) {
      owed += std::chrono::duration<double>(now - last).count() * options_.speed;
      const int steps = std::min(static_cast<int>(std::floor(owed / dt)), options_.max_steps_per_tick);
      if (steps > 0) {
        engine_.tick(steps);
        owed -= steps * dt;
        owed = std::min(owed, dt * options_.max_steps_per_tick);
      }
    } else {
      owed = 0.0;
    }
    last = now;
  }
}

}  // namespace skilladapt::engine
