#include "skilladapt/engine/engine.hpp"

#include <cmath>

#include "skilladapt/kmp/gmm.hpp"
#include "skilladapt/kmp/io.hpp"
#include "skilladapt/kmp/repulsion.hpp"
#include "skilladapt/sim/demonstration.hpp"

namespace skilladapt::engine {

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::BadPayload, msg); }

const json& field(const json& p, const char* key) {
  if (!p.is_object() || !p.contains(key)) bad(std::string("missing field '") + key + "'");
  return p.at(key);
}

double number(const json& p, const char* key) {
  const auto& v = field(p, key);
  if (!v.is_number() || !std::isfinite(v.get<double>())) bad(std::string("'") + key + "' must be a finite number");
  return v.get<double>();
}

int integer(const json& p, const char* key) {
  const auto& v = field(p, key);
  if (!v.is_number_integer()) bad(std::string("'") + key + "' must be an integer");
  return v.get<int>();
}

Vector3d vec3(const json& p, const char* key) {
  const auto& v = field(p, key);
  if (!v.is_array() || v.size() != 3) bad(std::string("'") + key + "' must be [x, y, z]");
  Vector3d out;
  for (int i = 0; i < 3; ++i) {
    if (!v[static_cast<std::size_t>(i)].is_number()) bad(std::string("'") + key + "' must hold numbers");
    out(i) = v[static_cast<std::size_t>(i)].get<double>();
  }
  if (!out.allFinite()) bad(std::string("'") + key + "' must be finite");
  return out;
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

json hid_json(const intention::EnergyTankBank& hid, const sim::Executor* ex, bool enabled) {
  const auto state = hid.state();
  intention::StiffnessCommand stiff;
  if (ex && ex->status().state == sim::RunState::executing) stiff = ex->status().stiffness;
  Vector6d energy;
  for (int i = 0; i < 6; ++i) energy(i) = hid.energy(i);
  return {{"h", to_vec(state.h)},
          {"energy", to_vec(energy)},
          {"stiffness_f", to_vec(stiff.k_f)},
          {"stiffness_t", to_vec(stiff.k_t)},
          {"enabled", enabled}};
}

json coverage_json(const ergodic::ErgodicController& c) {
  const auto& sp = c.setpoints();
  return {{"exec", std::string(ergodic::to_string(c.exec()))},
          {"metric", c.metric()},
          {"t", c.time()},
          {"x", {c.position().x(), c.position().y()}},
          {"setpoints",
           {{"velocity", sp.velocity()},
            {"force", sp.force()},
            {"stiffness_tangential", sp.stiffness_tangential()},
            {"stiffness_normal", sp.stiffness_normal()}}}};
}

}  // namespace

json trajectory_json(const kmp::Trajectory& traj) {
  json out = json::array();
  for (const auto& p : traj.points) {
    out.push_back({{"t", p.t},
                   {"s", p.s},
                   {"pos", {p.pose(0), p.pose(1), p.pose(2)}},
                   {"quat", {p.pose(3), p.pose(4), p.pose(5), p.pose(6)}}});
  }
  return out;
}

Engine::Engine(EngineConfig config, std::unique_ptr<gateway::ChatBackend> backend)
    : config_(std::move(config)),
      profile_(config_.nominal_duration),
      coverage_(ergodic::TargetDistribution::uniform(64), config_.coverage) {
  if (!backend) backend = std::make_unique<gateway::MockBackend>();
  llm_ = std::make_unique<LlmService>(std::move(backend), config_.llm);
}

void Engine::emit(std::string_view topic, const json& payload) {
  if (publish_) publish_(topic, payload);
}

void Engine::add_demonstrations(const std::string& name, std::vector<kmp::Demonstration> demos) {
  if (demos.empty()) throw Error(ErrorCode::EmptyData, "demonstration set '" + name + "' is empty");
  demos_[name] = std::move(demos);
}

json Engine::list_demonstrations() const {
  std::map<std::string, json> found;
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::is_directory(config_.demo_dir, ec)) {
    for (const auto& entry : fs::directory_iterator(config_.demo_dir, ec)) {
      if (!entry.is_directory()) continue;
      const auto files = kmp::list_demonstration_files(entry.path());
      if (!files.empty()) {
        found[entry.path().filename().string()] = {{"name", entry.path().filename().string()},
                                                   {"count", files.size()},
                                                   {"source", "file"}};
      }
    }
  }
  for (const auto& [name, demos] : demos_) {
    found[name] = {{"name", name}, {"count", demos.size()}, {"source", "memory"}};
  }
  json out = json::array();
  for (auto& [_, v] : found) out.push_back(std::move(v));
  return {{"demonstrations", out}};
}

const std::vector<kmp::Demonstration>& Engine::demonstrations(const std::string& name) {
  if (auto it = demos_.find(name); it != demos_.end()) return it->second;
  const auto dir = config_.demo_dir / name;
  std::vector<kmp::Demonstration> demos;
  for (const auto& f : kmp::list_demonstration_files(dir)) demos.push_back(kmp::load_demonstration(f));
  if (demos.empty()) throw Error(ErrorCode::UnknownId, "unknown demonstration set '" + name + "'");
  return demos_[name] = std::move(demos);
}

void Engine::fit(const std::string& name) {
  require_idle("fitting a model");
  const auto& raw = demonstrations(name);
  std::vector<kmp::Demonstration> clean;
  for (const auto& d : raw) clean.push_back(sim::record_demonstration(d.samples));
  const auto aligned = clean.size() > 1 ? sim::dtw_align(clean) : clean;
  kmp::GmmOptions opts;
  opts.seed = config_.seed;
  const auto gmm = kmp::fit_gmm(aligned, config_.gmm_components, opts);
  original_.emplace(kmp::gmr_reference(gmm, config_.samples));
  model_ = original_;
  model_name_ = name;
  profile_ = kmp::TimeProfile(config_.nominal_duration);
  executor_.reset();
}

const kmp::KmpModel& Engine::model() const {
  if (!model_) throw Error(ErrorCode::InvalidArgument, "no model loaded; call get_model with a demonstration name");
  return *model_;
}

const kmp::KmpModel& Engine::original_model() const {
  if (!original_) throw Error(ErrorCode::InvalidArgument, "no model loaded; call get_model with a demonstration name");
  return *original_;
}

kmp::KmpModel& Engine::mutable_model() {
  if (!model_) throw Error(ErrorCode::InvalidArgument, "no model loaded; call get_model with a demonstration name");
  return *model_;
}

void Engine::require_idle(std::string_view what) const {
  if (executor_ && executor_->status().state == sim::RunState::executing) {
    throw Error(ErrorCode::Busy, std::string(what) + " is not allowed while a trajectory executes");
  }
}

kmp::Trajectory Engine::updated_trajectory() const {
  return kmp::sample_trajectory(model(), config_.samples, profile_);
}

kmp::Trajectory Engine::original_trajectory() const {
  return kmp::sample_trajectory(original_model(), config_.samples, kmp::TimeProfile(config_.nominal_duration));
}

Vector7d Engine::pose_with_current_orientation(double s, const json& payload) const {
  Vector7d pose = model().predict_mean(s);
  pose.head<3>() = vec3(payload, "pos");
  if (payload.contains("quat")) {
    const auto& q = payload.at("quat");
    if (!q.is_array() || q.size() != 4) bad("'quat' must be [w, x, y, z]");
    for (int i = 0; i < 4; ++i) pose(3 + i) = q[static_cast<std::size_t>(i)].get<double>();
  }
  return pose;
}

std::vector<int> Engine::add_via_point(double time, const Vector3d& pos) {
  require_idle("adding a via-point");
  auto& m = mutable_model();
  Vector7d pose = m.predict_mean(time);
  pose.head<3>() = pos;
  return {m.add_via_point(time, pose, kmp::kDefaultViaPrecision, kmp::ViaSource::language)};
}

std::vector<int> Engine::add_repulsion(const Vector3d& center, double radius) {
  require_idle("adding a repulsion");
  return kmp::repulsion_via_points(mutable_model(), center, radius);
}

void Engine::time_scale(double percentage, double t_start, double t_end, kmp::ScaleMode mode) {
  require_idle("retiming");
  model();
  profile_ = kmp::time_scale(profile_, percentage, t_start, t_end, mode);
}

void Engine::set_velocity(double v) { coverage_.setpoints().set_velocity(v); }
void Engine::set_force(double f) { coverage_.setpoints().set_force(f); }
void Engine::set_stiffness(double k) { coverage_.setpoints().set_stiffness(k); }
void Engine::set_exec_state(std::string_view cmd) { coverage_.set_exec_state(cmd); }

json Engine::context_json() const {
  json ctx = {{"coverage", coverage_json(coverage_)}};
  if (model_) {
    const auto& m = *model_;
    json samples = json::array();
    for (double s : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const auto p = m.predict_mean(s);
      samples.push_back({{"time", s}, {"pos", {p(0), p(1), p(2)}}});
    }
    ctx["skill"] = {{"name", model_name_},
                    {"duration_s", profile_.duration()},
                    {"samples", samples},
                    {"via_points", m.via_points().size()}};
  }
  return ctx;
}

json Engine::status_json() const {
  json s;
  if (executor_) {
    const auto& st = executor_->status();
    s = {{"state", std::string(sim::to_string(st.state))},
         {"index", st.index},
         {"progress", st.progress},
         {"t", st.t},
         {"s", st.s},
         {"pose", kmp::pose_to_json(st.pose)},
         {"target", kmp::pose_to_json(st.target)}};
  } else {
    s = {{"state", "idle"}, {"index", 0}, {"progress", 0.0}, {"t", 0.0}, {"s", 0.0}, {"pose", nullptr}, {"target", nullptr}};
  }
  s["hid"] = hid_json(hid_, executor_.get(), hid_enabled_);
  s["coverage"] = coverage_json(coverage_);
  return s;
}

bool Engine::active() const {
  return (executor_ && executor_->status().state == sim::RunState::executing) ||
         coverage_.exec() == ergodic::ExecState::running;
}

void Engine::tick(int steps) {
  const bool executing = executor_ && executor_->status().state == sim::RunState::executing;
  if (executing) executor_->advance(steps);
  if (coverage_.exec() == ergodic::ExecState::running) {
    const double dt = 1.0 / config_.execution.rate_hz;
    for (int i = 0; i < steps; ++i) {
      coverage_.step(dt);
      // Status rides on the executor's cadence when it runs.
      if (++coverage_steps_ % config_.execution.status_every == 0 && !executing) {
        emit("execution_status", status_json());
      }
    }
  }
}

json Engine::call(std::string_view service, const json& payload_in) {
  const json payload = payload_in.is_null() ? json::object() : payload_in;
  if (!payload.is_object()) bad("payload must be a JSON object");

  if (service == "list_demonstrations") return list_demonstrations();
  if (service == "get_demonstration") {
    const auto name = field(payload, "name").get<std::string>();
    const auto& demos = demonstrations(name);
    json list = json::array();
    for (const auto& d : demos) {
      json samples = json::array();
      for (const auto& s : d.samples) {
        samples.push_back({{"t", s.t},
                           {"pos", {s.pos(0), s.pos(1), s.pos(2)}},
                           {"quat", {s.quat(0), s.quat(1), s.quat(2), s.quat(3)}}});
      }
      list.push_back(samples);
    }
    return {{"name", name}, {"demos", list}};
  }
  if (service == "get_model") {
    if (payload.contains("name")) {
      if (!payload["name"].is_string()) bad("'name' must be a string");
      fit(payload["name"].get<std::string>());
    }
    return {{"name", model_name_},
            {"duration", config_.nominal_duration},
            {"trajectory", trajectory_json(original_trajectory())}};
  }
  if (service == "get_updated_model") {
    json vias = json::array();
    for (const auto& v : model().via_points()) vias.push_back(kmp::via_point_to_json(v));
    json segs = json::array();
    for (const auto& sg : profile_.segments()) segs.push_back({{"s0", sg.s0}, {"s1", sg.s1}, {"speed", sg.speed}});
    return {{"name", model_name_},
            {"duration", profile_.duration()},
            {"profile", segs},
            {"via_points", vias},
            {"trajectory", trajectory_json(updated_trajectory())}};
  }
  if (service == "start_execution") {
    require_idle("starting an execution");
    auto& m = mutable_model();
    auto cfg = config_.execution;
    cfg.samples = config_.samples;
    cfg.hid_enabled = payload.value("hid", hid_enabled_);
    hid_.set_enabled(cfg.hid_enabled);
    executor_ = std::make_unique<sim::Executor>(m, profile_, hid_, cfg);
    executor_->on_status = [this](const sim::ExecutionStatus&) { emit("execution_status", status_json()); };
    emit("execution_status", status_json());
    return {{"duration", executor_->duration()}, {"samples", cfg.samples}, {"hid", cfg.hid_enabled}};
  }
  if (service == "stop_execution") {
    if (executor_ && executor_->status().state == sim::RunState::executing) {
      executor_->abort();
      executor_->advance(1);
    }
    return {{"state", executor_ ? std::string(sim::to_string(executor_->status().state)) : "idle"}};
  }
  if (service == "add_via_point") {
    require_idle("adding a via-point");
    double s;
    if (payload.contains("index")) {
      const int index = integer(payload, "index");
      if (index < 0 || index >= config_.samples) {
        throw Error(ErrorCode::InvalidTime, "index " + std::to_string(index) + " outside [0, " +
                                                std::to_string(config_.samples - 1) + "]");
      }
      s = updated_trajectory().points[static_cast<std::size_t>(index)].s;
    } else {
      s = number(payload, "s");
    }
    const Vector7d pose = pose_with_current_orientation(s, payload);
    const int id = mutable_model().add_via_point(s, pose, kmp::kDefaultViaPrecision, kmp::ViaSource::graphical);
    return {{"id", id}, {"s", s}};
  }
  if (service == "adapt_via_point") {
    require_idle("adapting a via-point");
    const int id = integer(payload, "id");
    const double s = model().via_point(id).s_bar;
    mutable_model().adapt_via_point(id, pose_with_current_orientation(s, payload));
    return {{"id", id}};
  }
  if (service == "delete_via_point") {
    require_idle("deleting a via-point");
    const int id = integer(payload, "id");
    mutable_model().remove_via_point(id);
    return {{"id", id}};
  }
  if (service == "set_hid_enabled") {
    const auto& v = field(payload, "enabled");
    if (!v.is_boolean()) bad("'enabled' must be a boolean");
    hid_enabled_ = v.get<bool>();
    hid_.set_enabled(hid_enabled_);
    return {{"enabled", hid_enabled_}};
  }
  if (service == "get_hid_state") return hid_json(hid_, executor_.get(), hid_enabled_);
  if (service == "apply_time_scale") {
    const auto mode = payload.value("mode", std::string("slow"));
    if (mode != "slow" && mode != "fast") bad("'mode' must be \"slow\" or \"fast\"");
    const double t0 = number(payload, "t_start");
    const double t1 = number(payload, "t_end");
    time_scale(number(payload, "percentage"), t0, t1, mode == "slow" ? kmp::ScaleMode::slow : kmp::ScaleMode::fast);
    return {{"duration", profile_.duration()}, {"window_duration", profile_.window_duration(t0, t1)}};
  }
  if (service == "add_repulsion") {
    const auto ids = add_repulsion(vec3(payload, "pos"), number(payload, "radius"));
    return {{"ids", ids}};
  }
  if (service == "set_llm_input_query") {
    const auto& t = field(payload, "text");
    if (!t.is_string()) bad("'text' must be a string");
    const auto text = t.get<std::string>();
    const int id = llm_->begin(text);
    const auto note = llm_->run(id, text, *this, payload.value("context", context_json()));
    emit("llm_notification", note);
    return {{"query_id", id}};
  }
  if (service == "get_llm_answer") {
    std::optional<int> id;
    if (payload.contains("query_id")) id = integer(payload, "query_id");
    return llm_->answer(id);
  }
  if (service == "transcribe_speech") {
    throw Error(ErrorCode::NotSupported, "speech transcription is not available; send text instead");
  }
  if (service == "sim/inject_wrench") {
    if (!executor_ || executor_->status().state != sim::RunState::executing) {
      throw Error(ErrorCode::NotRunning, "no trajectory is executing");
    }
    const auto& w = field(payload, "wrench");
    if (!w.is_array() || w.size() != 6) bad("'wrench' must have 6 numbers");
    Vector6d wrench;
    for (int i = 0; i < 6; ++i) wrench(i) = w[static_cast<std::size_t>(i)].get<double>();
    executor_->inject_wrench(wrench, number(payload, "duration_s"));
    return {{"t", executor_->status().t}};
  }
  if (service == "coverage/start") {
    if (payload.contains("bumps")) {
      std::vector<ergodic::TargetDistribution::Bump> bumps;
      for (const auto& b : payload["bumps"]) {
        const auto& c = field(b, "center");
        bumps.push_back({{c.at(0).get<double>(), c.at(1).get<double>()}, number(b, "sigma"), b.value("weight", 1.0)});
      }
      coverage_.set_target(ergodic::TargetDistribution::gaussian_mixture(payload.value("grid", 64), bumps));
    } else {
      coverage_.set_target(ergodic::TargetDistribution::uniform(payload.value("grid", 64)));
    }
    coverage_.start();
    coverage_steps_ = 0;
    return coverage_json(coverage_);
  }
  if (service == "coverage/stop") {
    coverage_.stop();
    return coverage_json(coverage_);
  }
  if (service == "coverage/heatmap") {
    const auto& h = coverage_.visit_histogram();
    json rows = json::array();
    for (Eigen::Index i = 0; i < h.rows(); ++i) rows.push_back(to_vec(h.row(i).transpose()));
    return {{"bins", h.rows()}, {"values", rows}};
  }
  throw Error(ErrorCode::UnknownService, "unknown service '" + std::string(service) + "'");
}

}  // namespace skilladapt::engine
