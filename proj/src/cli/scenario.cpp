#include "skilladapt/cli/scenario.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <thread>

#include "skilladapt/bridge/service.hpp"
#include "skilladapt/gateway/tools.hpp"
#include "skilladapt/kmp/io.hpp"
#include "skilladapt/sim/demonstration.hpp"

namespace skilladapt::cli {

namespace fs = std::filesystem;

namespace {

struct Wrench {
  double at;  // execution time, s
  Vector6d w;
  double duration;
};

struct Context {
  const RunOptions& options;
  std::ostream& log;
  engine::Engine& engine;
  std::vector<Wrench> pending;
  json metrics = json::object();
  std::vector<std::array<double, 4>> executed;  // t, x, y, z
  std::vector<fs::path> artifacts;
};

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); }

const json& arg(const json& args, const char* key) {
  if (!args.contains(key)) fail(std::string("missing argument '") + key + "'");
  return args.at(key);
}

void do_fit(Context& c, const json& args) {
  const auto name = arg(args, "demonstrations").get<std::string>();
  if (args.value("synthetic", false)) {
    c.engine.add_demonstrations(name, sim::synthetic_demonstrations(name, args.value("count", 3), args.value("samples", 200),
                                                                    c.engine.config().seed));
  }
  c.engine.fit(name);
  c.log << "fit '" << name << "': " << c.engine.model().references().size() << " references\n";
}

void do_tool_call(Context& c, const json& args) {
  gateway::ToolCall call;
  call.tool = arg(args, "tool").get<std::string>();
  call.args = args.value("args", json::object());
  call.origin = gateway::CallOrigin::test;
  const auto registry = gateway::register_builtin_tools();
  const auto rec = gateway::dispatch(registry, call, c.engine);
  c.log << gateway::to_string(rec.outcome) << ' ' << gateway::describe(call);
  if (!rec.reason.empty()) c.log << ": " << rec.reason;
  c.log << '\n';
  if (rec.outcome != gateway::Outcome::applied) throw Error(ErrorCode::OutOfBounds, rec.reason);
}

void do_query(Context& c, const json& args) {
  const auto r = c.engine.call("set_llm_input_query", {{"text", arg(args, "text")}});
  const auto answer = c.engine.call("get_llm_answer", {{"query_id", r["query_id"]}});
  c.log << "answer: " << answer["text"].get<std::string>() << '\n';
  if (args.value("require_applied", false)) {
    for (const auto& rec : answer["records"]) {
      if (rec["outcome"] != "applied") throw Error(ErrorCode::OutOfBounds, rec["reason"].get<std::string>());
    }
    if (answer["records"].empty()) fail("query produced no tool call");
  }
}

void do_execute(Context& c, const json& args) {
  json payload = json::object();
  if (args.contains("hid")) payload["hid"] = args["hid"];
  c.engine.call("start_execution", payload);
  std::sort(c.pending.begin(), c.pending.end(), [](const Wrench& a, const Wrench& b) { return a.at < b.at; });
  std::size_t next = 0;
  const auto* ex = c.engine.executor();
  while (ex->status().state == sim::RunState::executing) {
    while (next < c.pending.size() && ex->status().t >= c.pending[next].at) {
      const auto& w = c.pending[next++];
      c.engine.call("sim/inject_wrench",
                    {{"wrench", std::vector<double>(w.w.data(), w.w.data() + 6)}, {"duration_s", w.duration}});
    }
    c.engine.tick(1);
    const auto& p = ex->effector().pos;
    c.executed.push_back({ex->status().t, p.x(), p.y(), p.z()});
  }
  c.pending.clear();
  json vias = json::array();
  for (int id : ex->inserted_via_points()) vias.push_back(kmp::via_point_to_json(c.engine.model().via_point(id)));
  c.metrics["execution"] = {{"state", std::string(sim::to_string(ex->status().state))},
                            {"duration_s", ex->duration()},
                            {"steps", ex->steps()},
                            {"max_tracking_error", ex->max_tracking_error()},
                            {"inserted_via_points", vias},
                            {"final_stiffness_f", std::vector<double>(3, ex->status().stiffness.k_f(0))},
                            {"final_stiffness_t", std::vector<double>(3, ex->status().stiffness.k_t(0))}};
  c.log << "executed " << ex->steps() << " steps, " << vias.size() << " physical via-point(s)\n";
}

void do_coverage(Context& c, const json& args) {
  json start = json::object();
  if (args.contains("bumps")) start["bumps"] = args["bumps"];
  if (args.contains("grid")) start["grid"] = args["grid"];
  c.engine.call("coverage/start", start);
  const double duration = arg(args, "duration_s").get<double>();
  const double dt = 1.0 / c.engine.config().execution.rate_hz;
  const int steps = static_cast<int>(std::lround(duration / dt));
  json trace = json::array();
  const int every = std::max(1, static_cast<int>(std::lround(args.value("metric_every_s", 1.0) / dt)));
  for (int i = 1; i <= steps; ++i) {
    c.engine.tick(1);
    if (i % every == 0) trace.push_back({{"t", c.engine.coverage().time()}, {"metric", c.engine.coverage().metric()}});
  }
  c.metrics["coverage"] = {{"metric", c.engine.coverage().metric()}, {"trace", trace}};
  c.engine.call("coverage/stop", json::object());
  c.log << "coverage ran " << duration << " s, metric " << c.metrics["coverage"]["metric"].get<double>() << '\n';
}

fs::path out_path(Context& c, const json& args) {
  fs::create_directories(c.options.out_dir);
  return c.options.out_dir / arg(args, "file").get<std::string>();
}

void do_export(Context& c, const json& args) {
  const auto what = args.value("what", std::string("trajectory"));
  const auto path = out_path(c, args);
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  if (what == "trajectory") {
    kmp::write_trajectory_csv(out, c.engine.updated_trajectory());
  } else if (what == "original") {
    kmp::write_trajectory_csv(out, c.engine.original_trajectory());
  } else if (what == "executed") {
    out << "t,x,y,z\n" << std::setprecision(9) << std::fixed;
    for (const auto& r : c.executed) out << r[0] << ',' << r[1] << ',' << r[2] << ',' << r[3] << '\n';
  } else if (what == "model") {
    out << kmp::model_to_json(c.engine.model()).dump(2) << '\n';
  } else if (what == "heatmap") {
    out << c.engine.call("coverage/heatmap", json::object()).dump() << '\n';
  } else if (what == "metrics") {
    out << c.metrics.dump(2) << '\n';
  } else {
    fail("unknown export '" + what + "'");
  }
  c.artifacts.push_back(path);
  c.log << "wrote " << path.string() << '\n';
}

void do_serve(Context& c, const json& args) {
  engine::Runtime rt(c.engine);
  bridge::ServerOptions opts;
  opts.host = args.value("host", std::string("127.0.0.1"));
  opts.port = static_cast<std::uint16_t>(args.value("port", 0));
  bridge::BridgeService svc(c.engine, rt, opts);
  svc.start();
  c.log << "serving on " << opts.host << ':' << svc.port() << '\n';
  std::this_thread::sleep_for(std::chrono::duration<double>(args.value("duration_s", 1.0)));
  svc.stop();
}

}  // namespace

engine::EngineConfig engine_config_from_json(const json& j, const fs::path& base_dir) {
  engine::EngineConfig cfg;
  if (j.is_null()) return cfg;
  if (!j.is_object()) fail("config must be an object");
  for (const auto& [k, v] : j.items()) {
    if (k == "demo_dir") {
      fs::path p = v.get<std::string>();
      cfg.demo_dir = p.is_absolute() ? p : base_dir / p;
    } else if (k == "gmm_components") {
      cfg.gmm_components = v.get<int>();
    } else if (k == "samples") {
      cfg.samples = v.get<int>();
    } else if (k == "nominal_duration") {
      cfg.nominal_duration = v.get<double>();
    } else if (k == "seed") {
      cfg.seed = v.get<std::uint64_t>();
    } else if (k == "rate_hz") {
      cfg.execution.rate_hz = v.get<double>();
    } else if (k == "status_every") {
      cfg.execution.status_every = v.get<int>();
    } else if (k == "coverage_modes") {
      cfg.coverage.modes = v.get<int>();
    } else if (k == "heatmap_bins") {
      cfg.coverage.heatmap_bins = v.get<int>();
    } else if (k == "llm" || k == "bridge") {
      // consumed by the serve command
    } else {
      fail("unknown config key '" + k + "'");
    }
  }
  return cfg;
}

RunResult run_scenario(const json& scenario, const RunOptions& options, std::ostream& log) {
  RunResult result;
  engine::EngineConfig cfg;
  try {
    cfg = engine_config_from_json(scenario.value("config", json()), options.base_dir);
    if (scenario.contains("demo_dir")) {
      fs::path p = scenario["demo_dir"].get<std::string>();
      cfg.demo_dir = p.is_absolute() ? p : options.base_dir / p;
    }
    if (scenario.contains("seed")) cfg.seed = scenario["seed"].get<std::uint64_t>();
    if (options.seed) cfg.seed = *options.seed;
  } catch (const std::exception& e) {
    result.exit_code = 2;
    result.message = std::string("invalid scenario: ") + e.what();
    log << result.message << '\n';
    return result;
  }
  engine::Engine eng(cfg);
  Context ctx{options, log, eng, {}, json::object(), {}, {}};
  const json steps = scenario.value("steps", json::array());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& step = steps[i];
    const auto action = step.value("action", std::string());
    const json args = step.value("args", json::object());
    try {
      if (action == "fit") {
        do_fit(ctx, args);
      } else if (action == "tool_call") {
        do_tool_call(ctx, args);
      } else if (action == "query") {
        do_query(ctx, args);
      } else if (action == "service") {
        const auto r = eng.call(arg(args, "name").get<std::string>(), args.value("payload", json::object()));
        log << arg(args, "name").get<std::string>() << " -> " << r.dump().substr(0, 200) << '\n';
      } else if (action == "inject_wrench") {
        const auto& w = arg(args, "wrench");
        Wrench wr{arg(args, "at_s").get<double>(), Vector6d::Zero(), arg(args, "duration_s").get<double>()};
        if (!w.is_array() || w.size() != 6) fail("'wrench' must have 6 numbers");
        for (int k = 0; k < 6; ++k) wr.w(k) = w[static_cast<std::size_t>(k)].get<double>();
        ctx.pending.push_back(wr);
      } else if (action == "execute") {
        do_execute(ctx, args);
      } else if (action == "coverage") {
        do_coverage(ctx, args);
      } else if (action == "export") {
        do_export(ctx, args);
      } else if (action == "serve") {
        do_serve(ctx, args);
      } else {
        fail("unknown action '" + action + "'");
      }
    } catch (const std::exception& e) {
      result.exit_code = 1;
      result.failed_step = static_cast<int>(i);
      result.message = "step " + std::to_string(i) + " (" + action + ") failed: " + e.what();
      log << result.message << '\n';
      result.artifacts = ctx.artifacts;
      return result;
    }
  }
  result.artifacts = ctx.artifacts;
  return result;
}

RunResult run_scenario_file(const fs::path& file, const RunOptions& options, std::ostream& log) {
  std::ifstream in(file);
  if (!in) {
    log << "cannot read " << file.string() << '\n';
    return {2, -1, "cannot read " + file.string(), {}};
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    log << "invalid JSON in " << file.string() << ": " << e.what() << '\n';
    return {2, -1, e.what(), {}};
  }
  RunOptions opts = options;
  opts.base_dir = file.parent_path().empty() ? fs::path(".") : file.parent_path();
  return run_scenario(doc, opts, log);
}

}  // namespace skilladapt::cli
