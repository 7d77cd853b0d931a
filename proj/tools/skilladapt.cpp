#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include "skilladapt/bridge/service.hpp"
#include "skilladapt/cli/scenario.hpp"
#include "skilladapt/kmp/io.hpp"
#include "skilladapt/sim/demonstration.hpp"

using namespace skilladapt;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

int serve(const std::string& host, int port, const std::string& config_path, bool mock_llm, double speed,
          const std::string& demo_dir) {
  json cfg = json::object();
  fs::path base = ".";
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "cannot read config " << config_path << '\n';
      return 2;
    }
    cfg = json::parse(in);
    base = fs::path(config_path).parent_path();
  }
  auto ecfg = cli::engine_config_from_json(cfg, base.empty() ? fs::path(".") : base);
  if (!demo_dir.empty()) ecfg.demo_dir = demo_dir;

  const json llm = cfg.value("llm", json::object());
  gateway::SessionConfig session;
  session.model = env_or("SKILLADAPT_LLM_MODEL", llm.value("model", session.model));
  session.system_prompt = llm.value("system_prompt", session.system_prompt);
  std::unique_ptr<gateway::ChatBackend> backend;
  if (mock_llm || llm.value("mock", false)) {
    backend = std::make_unique<gateway::MockBackend>();
  } else {
    gateway::HttpBackendConfig h;
    h.url = env_or(gateway::kBackendUrlEnv, llm.value("url", h.url));
    h.api_key = env_or("SKILLADAPT_LLM_API_KEY", llm.value("api_key", std::string()));
    h.timeout = std::chrono::milliseconds(static_cast<long>(1000.0 * llm.value("timeout_s", 60.0)));
    backend = std::make_unique<gateway::HttpChatBackend>(h);
    std::cerr << "language backend: " << h.url << '\n';
  }
  ecfg.llm = session;
  engine::Engine eng(ecfg, std::move(backend));

  const json b = cfg.value("bridge", json::object());
  bridge::ServerOptions opts;
  opts.host = host.empty() ? b.value("host", opts.host) : host;
  opts.port = static_cast<std::uint16_t>(port >= 0 ? port : b.value("port", 9090));
  engine::Runtime rt(eng, {speed, 400});
  bridge::BridgeService svc(eng, rt, opts);
  try {
    svc.start();
  } catch (const Error& e) {
    std::cerr << to_string(e.code()) << ": " << e.what() << '\n';
    return 3;
  }
  std::cout << "bridge listening on ws://" << opts.host << ':' << svc.port() << std::endl;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  svc.stop();
  std::cout << "bridge stopped" << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive skill adaptation engine: KMP skills, intention detection, tool gateway, coverage"};
  app.require_subcommand(1);

  auto* serve_cmd = app.add_subcommand("serve", "Run the engine, simulator and WebSocket bridge");
  int port = -1;
  std::string host;
  std::string config;
  bool mock = false;
  double speed = 1.0;
  std::string demo_dir;
  serve_cmd->add_option("--port", port, "Bridge port (default 9090, 0 = any free port)");
  serve_cmd->add_option("--host", host, "Bind address (default 127.0.0.1)");
  serve_cmd->add_option("--config", config, "JSON configuration file")->check(CLI::ExistingFile);
  serve_cmd->add_flag("--mock-llm", mock, "Use the deterministic rule-based language backend");
  serve_cmd->add_option("--speed", speed, "Simulated seconds per wall-clock second")->check(CLI::PositiveNumber);
  serve_cmd->add_option("--demo-dir", demo_dir, "Directory of demonstration sets");

  auto* run_cmd = app.add_subcommand("run", "Execute a scenario file");
  std::string scenario;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  run_cmd->add_option("scenario", scenario, "Scenario JSON")->required();
  auto* seed_opt = run_cmd->add_option("--seed", seed, "Seed (overrides the scenario)");
  run_cmd->add_option("--out-dir", out_dir, "Directory for exported files");

  auto* gen_cmd = app.add_subcommand("generate-demos", "Write the synthetic demonstration sets as JSONL");
  std::string gen_out = "data/demos";
  std::uint64_t gen_seed = 7;
  gen_cmd->add_option("--out-dir", gen_out, "Output directory");
  gen_cmd->add_option("--seed", gen_seed, "Noise seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*serve_cmd) return serve(host, port, config, mock, speed, demo_dir);
    if (*run_cmd) {
      cli::RunOptions opts;
      if (*seed_opt) opts.seed = seed;
      opts.out_dir = out_dir;
      const auto r = cli::run_scenario_file(scenario, opts, std::cout);
      return r.exit_code;
    }
    if (*gen_cmd) {
      for (const std::string skill : {"sweep", "reach", "pick_place"}) {
        const auto dir = fs::path(gen_out) / skill;
        fs::create_directories(dir);
        const auto demos = sim::synthetic_demonstrations(skill, 3, 200, gen_seed);
        for (std::size_t i = 0; i < demos.size(); ++i) {
          std::ofstream out(dir / ("demo_" + std::to_string(i) + ".jsonl"));
          kmp::write_demonstration(out, demos[i]);
        }
        std::cout << "wrote " << demos.size() << " demos to " << dir.string() << '\n';
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << to_string(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }
  return 0;
}
