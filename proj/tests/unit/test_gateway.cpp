#include <doctest.h>

#include <cmath>
#include <random>

#include "skilladapt/engine/engine.hpp"
#include "skilladapt/gateway/backend.hpp"
#include "skilladapt/gateway/session.hpp"
#include "skilladapt/gateway/tools.hpp"
#include "skilladapt/sim/demonstration.hpp"

using namespace skilladapt;
using namespace skilladapt::gateway;

namespace {

// Records every call it receives; counts as a mutation.
struct CountingTarget : ToolTarget {
  int mutations = 0;
  std::vector<std::string> log;
  std::vector<int> add_via_point(double, const Vector3d&) override {
    ++mutations;
    log.push_back("AddViaPoints");
    return {1};
  }
  std::vector<int> add_repulsion(const Vector3d&, double) override {
    ++mutations;
    log.push_back("AddRepulsion");
    return {2, 3};
  }
  void time_scale(double, double, double, kmp::ScaleMode m) override {
    ++mutations;
    log.push_back(m == kmp::ScaleMode::slow ? "SlowDown" : "SpeedUp");
  }
  void set_velocity(double) override {
    ++mutations;
    log.push_back("SetVelocity");
  }
  void set_force(double) override {
    ++mutations;
    log.push_back("SetForce");
  }
  void set_stiffness(double) override {
    ++mutations;
    log.push_back("SetStiffness");
  }
  void set_exec_state(std::string_view) override {
    ++mutations;
    log.push_back("SetExecState");
  }
};

struct ThrowingTarget : CountingTarget {
  void set_force(double) override { throw Error(ErrorCode::Busy, "engine busy"); }
};

// Minimal valid arguments for each tool, with one numeric slot to vary.
json base_args(const std::string& tool) {
  if (tool == "AddViaPoints") return {{"time", 0.5}, {"pos", {0.4, 0.0, 0.2}}};
  if (tool == "AddRepulsion") return {{"pos", {0.4, 0.0, 0.2}}, {"radius", 0.1}};
  if (tool == "SlowDown" || tool == "SpeedUp") return {{"percentage", 50}, {"t_start", 0.2}, {"t_end", 0.6}};
  if (tool == "SetVelocity") return {{"velocity", 6}};
  if (tool == "SetForce") return {{"force", 15}};
  if (tool == "SetStiffness") return {{"stiffness", 1000}};
  return {{"state", "pause"}};
}

ToolCall make(const std::string& tool, json args) { return {tool, std::move(args), CallOrigin::test}; }

}  // namespace

TEST_SUITE("tool registry") {
  TEST_CASE("eight builtin tools with their bounds") {
    const auto r = register_builtin_tools();
    CHECK(r.size() == 8);
    const auto* f = r.find("SetForce");
    REQUIRE(f);
    CHECK(f->params[0].min == 5.0);
    CHECK(f->params[0].max == 30.0);
    CHECK(r.find("SetVelocity")->params[0].min == 3.0);
    CHECK(r.find("SetVelocity")->params[0].max == 16.0);
    CHECK(r.find("SetStiffness")->params[0].min == 500.0);
    CHECK(r.find("SetStiffness")->params[0].max == 2000.0);
    CHECK(r.find("AddRepulsion")->params[1].max == 1.0);
    CHECK(r.find("SlowDown")->params[0].min == 1.0);
    CHECK(r.find("SpeedUp")->params[0].max == 100.0);
    CHECK(r.find("SetExecState")->params[0].allowed == std::vector<std::string>{"pause", "resume"});
  }

  TEST_CASE("duplicate registration is rejected") {
    auto r = register_builtin_tools();
    ToolSchema dup{"SlowDown", "again", {}, TargetSkill::kmp};
    CHECK_THROWS_AS(r.add(dup), Error);
    CHECK(r.size() == 8);
  }

  TEST_CASE("unbounded numeric parameters are rejected") {
    ToolRegistry r;
    ParamSpec p;
    p.name = "x";
    p.min = 0.0;
    p.max = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(r.add({"T", "", {p}, TargetSkill::kmp}), Error);
  }

  TEST_CASE("function schemas carry the bounds") {
    const auto j = register_builtin_tools().function_schemas();
    REQUIRE(j.size() == 8);
    const auto& force = j[5]["function"];
    CHECK(force["name"] == "SetForce");
    CHECK(force["parameters"]["properties"]["force"]["minimum"] == 5.0);
    CHECK(force["parameters"]["properties"]["force"]["maximum"] == 30.0);
    CHECK(force["parameters"]["required"] == json::array({"force"}));
    CHECK(j[0]["function"]["parameters"]["properties"]["pos"]["minItems"] == 3);
  }
}

TEST_SUITE("validation") {
  TEST_CASE("examples") {
    const auto r = register_builtin_tools();
    const auto bad = validate_call(r, make("SetForce", {{"force", 50}}));
    CHECK_FALSE(bad.ok);
    CHECK(bad.code == ErrorCode::OutOfBounds);
    CHECK(bad.message == "OutOfBounds(\"force\", 50, [5, 30])");
    CHECK(validate_call(r, make("SetForce", {{"force", 15}})).ok);
    CHECK(validate_call(r, make("AddViaPoints", {{"time", 1.0}, {"pos", {0, 0, 0}}})).ok);
    CHECK(validate_call(r, make("Nope", json::object())).code == ErrorCode::UnknownTool);
    CHECK(validate_call(r, make("SetForce", json::object())).code == ErrorCode::MissingParam);
    CHECK(validate_call(r, make("SetForce", {{"force", "high"}})).code == ErrorCode::BadPayload);
    CHECK(validate_call(r, make("SetExecState", {{"state", "stop"}})).code == ErrorCode::OutOfBounds);
    CHECK(validate_call(r, make("AddRepulsion", {{"pos", {0, 0}}, {"radius", 0.1}})).code == ErrorCode::BadPayload);
  }

  TEST_CASE("every bound, inside and outside, with zero mutations on rejection") {
    const auto r = register_builtin_tools();
    const double eps = 1e-9;
    int checked = 0;
    for (const auto& tool : r.tools()) {
      for (const auto& p : tool.params) {
        if (p.kind == ParamKind::string) continue;
        for (const auto& [value, expect] : std::vector<std::pair<double, bool>>{
                 {p.min - eps, false}, {p.min, true}, {p.max, true}, {p.max + eps, false}}) {
          json args = base_args(tool.name);
          if (p.kind == ParamKind::array) {
            args[p.name] = {value, 0.0, 0.0};
          } else {
            args[p.name] = value;
          }
          // Windows need t_start < t_end to be meaningful; keep the other end valid.
          if (p.name == "t_start" && value >= 0.6) args["t_end"] = 1.0;
          if (p.name == "t_end" && value <= 0.2) args["t_start"] = 0.0;
          CountingTarget target;
          const auto v = validate_call(r, make(tool.name, args));
          CHECK_MESSAGE(v.ok == expect, tool.name, ".", p.name, "=", value);
          const auto rec = dispatch(r, make(tool.name, args), target);
          if (!expect) {
            CHECK(rec.outcome == Outcome::rejected);
            CHECK(target.mutations == 0);
            CHECK_FALSE(rec.reason.empty());
          } else {
            CHECK(rec.outcome == Outcome::applied);
            CHECK(target.mutations == 1);
          }
          ++checked;
        }
      }
    }
    CHECK(checked == 4 * 13);
    for (const auto& [state, expect] : std::vector<std::pair<std::string, bool>>{
             {"pause", true}, {"resume", true}, {"Pause", false}, {"stop", false}, {"", false}}) {
      CountingTarget target;
      const auto rec = dispatch(r, make("SetExecState", {{"state", state}}), target);
      CHECK(rec.outcome == (expect ? Outcome::applied : Outcome::rejected));
      CHECK(target.mutations == (expect ? 1 : 0));
    }
  }

  TEST_CASE("random out-of-bounds calls never reach the target") {
    const auto r = register_builtin_tools();
    std::mt19937 rng(11);
    std::uniform_int_distribution<std::size_t> pick(0, r.size() - 1);
    std::uniform_real_distribution<double> excess(1e-6, 1e3);
    CountingTarget target;
    for (int i = 0; i < 2000; ++i) {
      const auto& tool = r.tools()[pick(rng)];
      json args = base_args(tool.name);
      const auto& p = tool.params[std::uniform_int_distribution<std::size_t>(0, tool.params.size() - 1)(rng)];
      if (p.kind == ParamKind::string) {
        args[p.name] = "x" + std::to_string(i);
      } else {
        const double v = (rng() % 2) ? p.max + excess(rng) : p.min - excess(rng);
        if (p.kind == ParamKind::array) {
          args[p.name] = {0.0, v, 0.0};
        } else {
          args[p.name] = v;
        }
      }
      const auto rec = dispatch(r, make(tool.name, args), target);
      CHECK(rec.outcome == Outcome::rejected);
    }
    CHECK(target.mutations == 0);
  }

  TEST_CASE("target errors become rejected records") {
    const auto r = register_builtin_tools();
    ThrowingTarget t;
    const auto rec = dispatch(r, make("SetForce", {{"force", 10}}), t);
    CHECK(rec.outcome == Outcome::rejected);
    CHECK(rec.reason.find("Busy") != std::string::npos);
  }
}

TEST_SUITE("backend protocol") {
  TEST_CASE("parse accepts string and object arguments") {
    const json resp = {{"choices",
                        {{{"message",
                           {{"content", "ok"},
                            {"tool_calls",
                             {{{"id", "a"}, {"type", "function"},
                               {"function", {{"name", "SetForce"}, {"arguments", "{\"force\": 12}"}}}},
                              {{"id", "b"}, {"type", "function"},
                               {"function", {{"name", "SetVelocity"}, {"arguments", {{"velocity", 4}}}}}}}}}}}}}};
    const auto r = parse_response(resp);
    CHECK(r.text == "ok");
    REQUIRE(r.calls.size() == 2);
    CHECK(r.calls[0].args["force"] == 12);
    CHECK(r.calls[1].args["velocity"] == 4);
    CHECK(r.calls[0].origin == CallOrigin::llm);
  }

  TEST_CASE("malformed responses are reported") {
    CHECK_THROWS_AS(parse_response(json::object()), Error);
    CHECK_THROWS_AS(parse_response({{"choices", json::array()}}), Error);
    const json bad_args = {
        {"choices", {{{"message", {{"tool_calls", {{{"function", {{"name", "SetForce"}, {"arguments", "{oops"}}}}}}}}}}}};
    try {
      parse_response(bad_args);
      FAIL("expected failure");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MalformedBackendResponse);
    }
  }

  TEST_CASE("request body has messages and tools") {
    const auto r = register_builtin_tools();
    const auto body = build_request("m", json::array({{{"role", "user"}, {"content", "hi"}}}), r);
    CHECK(body["model"] == "m");
    CHECK(body["tools"].size() == 8);
    CHECK(body["messages"][0]["content"] == "hi");
  }

  TEST_CASE("unreachable HTTP backend") {
    HttpBackendConfig cfg;
    cfg.url = "http://127.0.0.1:1/v1/chat/completions";
    cfg.timeout = std::chrono::milliseconds(500);
    HttpChatBackend b(cfg);
    try {
      b.complete(json::object());
      FAIL("expected failure");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BackendUnreachable);
    }
  }
}

TEST_SUITE("mock backend") {
  BackendReply ask(const std::string& text) {
    MockBackend m;
    const auto r = register_builtin_tools();
    return m.complete(build_request("mock", json::array({{{"role", "user"}, {"content", text}}}), r));
  }

  TEST_CASE("canonical utterances") {
    auto r = ask("slow down between 20% and 60% by half");
    REQUIRE(r.calls.size() == 1);
    CHECK(r.calls[0].tool == "SlowDown");
    CHECK(r.calls[0].args == json({{"percentage", 50.0}, {"t_start", 0.2}, {"t_end", 0.6}}));

    r = ask("Speed up between 60% and 100% by 30%");
    REQUIRE(r.calls.size() == 1);
    CHECK(r.calls[0].tool == "SpeedUp");
    CHECK(r.calls[0].args == json({{"percentage", 30.0}, {"t_start", 0.6}, {"t_end", 1.0}}));

    r = ask("add a via-point at time 0.3 at 0.45 -0.1 0.25");
    REQUIRE(r.calls.size() == 1);
    CHECK(r.calls[0].tool == "AddViaPoints");
    CHECK(r.calls[0].args == json({{"time", 0.3}, {"pos", {0.45, -0.1, 0.25}}}));

    r = ask("avoid the box at 0.4 0.1 0.2 radius 0.1");
    REQUIRE(r.calls.size() == 1);
    CHECK(r.calls[0].tool == "AddRepulsion");
    CHECK(r.calls[0].args == json({{"pos", {0.4, 0.1, 0.2}}, {"radius", 0.1}}));

    r = ask("pause");
    REQUIRE(r.calls.size() == 1);
    CHECK(r.calls[0].args == json({{"state", "pause"}}));

    r = ask("set the force to 50 newtons");
    REQUIRE(r.calls.size() == 1);
    CHECK(r.calls[0].args == json({{"force", 50.0}}));
  }

  TEST_CASE("unknown utterance is a text reply") {
    const auto r = ask("hello");
    CHECK(r.calls.empty());
    CHECK_FALSE(r.text.empty());
  }

  TEST_CASE("pure function of the request") {
    MockBackend m;
    const auto reg = register_builtin_tools();
    const auto req = build_request("mock", json::array({{{"role", "user"}, {"content", "pause"}}}), reg);
    CHECK(m.respond(req) == m.respond(req));
  }
}

TEST_SUITE("session") {
  TEST_CASE("query dispatches and records") {
    const auto reg = register_builtin_tools();
    MockBackend mock;
    ChatSession s(reg, mock);
    CountingTarget t;
    int notes = 0;
    s.on_notification = [&](const ChatTurn&) { ++notes; };
    const auto turn = s.handle_query("slow down between 20% and 60% by half", t);
    REQUIRE(turn.records.size() == 1);
    CHECK(turn.records[0].outcome == Outcome::applied);
    CHECK(t.log == std::vector<std::string>{"SlowDown"});
    CHECK(s.transcript().size() == 2);
    CHECK(s.records().size() == 1);
    CHECK(notes == 1);
  }

  TEST_CASE("rejection surfaces in the answer without mutation") {
    const auto reg = register_builtin_tools();
    MockBackend mock;
    ChatSession s(reg, mock);
    CountingTarget t;
    const auto turn = s.handle_query("set the force to 50 newtons", t);
    CHECK(t.mutations == 0);
    REQUIRE(turn.records.size() == 1);
    CHECK(turn.records[0].outcome == Outcome::rejected);
    CHECK(turn.text.find("[5, 30]") != std::string::npos);
  }

  TEST_CASE("empty text never reaches the backend") {
    struct Spy : ChatBackend {
      int calls = 0;
      BackendReply complete(const json&) override {
        ++calls;
        return {};
      }
    } spy;
    const auto reg = register_builtin_tools();
    ChatSession s(reg, spy);
    CountingTarget t;
    CHECK_THROWS_AS(s.handle_query("  ", t), Error);
    CHECK(spy.calls == 0);
    CHECK(s.transcript().empty());
  }

  TEST_CASE("multi-tool replies stop at the first rejection") {
    struct Scripted : ChatBackend {
      BackendReply complete(const json&) override {
        BackendReply r;
        r.calls = {{"SetVelocity", {{"velocity", 5}}, CallOrigin::llm},
                   {"SetForce", {{"force", 99}}, CallOrigin::llm},
                   {"SetStiffness", {{"stiffness", 900}}, CallOrigin::llm}};
        return r;
      }
    } scripted;
    const auto reg = register_builtin_tools();
    ChatSession s(reg, scripted);
    CountingTarget t;
    const auto turn = s.handle_query("do three things", t);
    REQUIRE(turn.records.size() == 3);
    CHECK(turn.records[0].outcome == Outcome::applied);
    CHECK(turn.records[1].outcome == Outcome::rejected);
    CHECK(turn.records[2].outcome == Outcome::skipped);
    CHECK(t.log == std::vector<std::string>{"SetVelocity"});
  }

  TEST_CASE("backend failure becomes an error turn and keeps the session") {
    HttpBackendConfig cfg;
    cfg.url = "http://127.0.0.1:1/v1/chat/completions";
    cfg.timeout = std::chrono::milliseconds(300);
    HttpChatBackend b(cfg);
    const auto reg = register_builtin_tools();
    ChatSession s(reg, b);
    CountingTarget t;
    const auto turn = s.handle_query("pause", t);
    CHECK(turn.error);
    CHECK(turn.text.find("BackendUnreachable") != std::string::npos);
    CHECK(s.transcript().size() == 2);
  }

  TEST_CASE("mock language adaptation through the engine") {
    engine::EngineConfig cfg;
    cfg.gmm_components = 6;
    cfg.samples = 100;
    engine::Engine eng(cfg);
    eng.add_demonstrations("sweep", sim::synthetic_demonstrations("sweep"));
    eng.fit("sweep");
    const double before = eng.profile().window_duration(0.2, 0.6);
    const auto reg = register_builtin_tools();
    MockBackend mock;
    ChatSession s(reg, mock);
    s.handle_query("slow down between 20% and 60% by half", eng);
    CHECK(eng.profile().window_duration(0.2, 0.6) == doctest::Approx(2.0 * before).epsilon(1e-12));
    s.handle_query("pause", eng);  // coverage idle: rejected, no change
    CHECK(s.records().back().outcome == Outcome::rejected);
    CHECK(eng.coverage().exec() == ergodic::ExecState::idle);
  }
}
