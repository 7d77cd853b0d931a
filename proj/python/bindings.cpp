#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "skilladapt/bridge/envelope.hpp"
#include "skilladapt/cli/scenario.hpp"
#include "skilladapt/engine/engine.hpp"
#include "skilladapt/ergodic/ergodic.hpp"
#include "skilladapt/error.hpp"
#include "skilladapt/gateway/backend.hpp"
#include "skilladapt/gateway/tools.hpp"
#include "skilladapt/intention/energy_tank.hpp"
#include "skilladapt/kmp/gmm.hpp"
#include "skilladapt/kmp/io.hpp"
#include "skilladapt/kmp/kmp_model.hpp"
#include "skilladapt/kmp/repulsion.hpp"
#include "skilladapt/kmp/time_profile.hpp"
#include "skilladapt/sim/demonstration.hpp"

namespace py = pybind11;
using namespace skilladapt;
using nlohmann::json;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Rows of t, x, y, z, qw, qx, qy, qz.
kmp::Demonstration demo_from_array(const RowMatrix& a) {
  if (a.cols() != 8) throw Error(ErrorCode::InvalidArgument, "demonstration arrays need 8 columns");
  kmp::Demonstration d;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    kmp::DemoSample s;
    s.t = a(i, 0);
    s.pos = a.row(i).segment<3>(1).transpose();
    s.quat = a.row(i).segment<4>(4).transpose();
    d.samples.push_back(s);
  }
  return d;
}

RowMatrix demo_to_array(const kmp::Demonstration& d) {
  RowMatrix a(static_cast<Eigen::Index>(d.samples.size()), 8);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const auto& s = d.samples[static_cast<std::size_t>(i)];
    a(i, 0) = s.t;
    a.row(i).segment<3>(1) = s.pos.transpose();
    a.row(i).segment<4>(4) = s.quat.transpose();
  }
  return a;
}

RowMatrix trajectory_to_array(const kmp::Trajectory& traj) {
  RowMatrix a(static_cast<Eigen::Index>(traj.points.size()), 9);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const auto& p = traj.points[static_cast<std::size_t>(i)];
    a(i, 0) = p.t;
    a(i, 1) = p.s;
    a.row(i).tail<7>() = p.pose.transpose();
  }
  return a;
}

kmp::ScaleMode scale_mode(const std::string& mode) {
  if (mode == "slow") return kmp::ScaleMode::slow;
  if (mode == "fast") return kmp::ScaleMode::fast;
  throw Error(ErrorCode::InvalidArgument, "mode must be 'slow' or 'fast'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the skilladapt package";

  static py::exception<Error> error(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::handle(error.ptr())(std::string(to_string(e.code())) + ": " + e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error.ptr(), exc.ptr());
    }
  });

  m.def("fit_model",
        [](const std::vector<RowMatrix>& demos, int components, int samples, std::uint64_t seed, bool align) {
          std::vector<kmp::Demonstration> ds;
          for (const auto& a : demos) ds.push_back(demo_from_array(a));
          if (align) ds = sim::dtw_align(ds);
          kmp::GmmOptions opts;
          opts.seed = seed;
          return kmp::KmpModel(kmp::gmr_reference(kmp::fit_gmm(ds, components, opts), samples));
        },
        py::arg("demos"), py::arg("components") = 12, py::arg("samples") = 500, py::arg("seed") = kmp::GmmOptions{}.seed,
        py::arg("align") = true, "Fit GMM/GMR references and build a model from (n, 8) arrays.");

  m.def("record_demonstration",
        [](const RowMatrix& raw, double min_spacing) {
          const auto d = demo_from_array(raw);
          return demo_to_array(sim::record_demonstration(d.samples, min_spacing));
        },
        py::arg("raw"), py::arg("min_spacing") = 0.001);

  m.def("dtw_align",
        [](const std::vector<RowMatrix>& demos) {
          std::vector<kmp::Demonstration> ds;
          for (const auto& a : demos) ds.push_back(demo_from_array(a));
          std::vector<RowMatrix> out;
          for (const auto& d : sim::dtw_align(ds)) out.push_back(demo_to_array(d));
          return out;
        },
        py::arg("demos"));

  py::class_<kmp::TimeProfile>(m, "TimeProfile")
      .def(py::init<double>(), py::arg("nominal_duration") = 10.0)
      .def_property_readonly("duration", &kmp::TimeProfile::duration)
      .def("window_duration", &kmp::TimeProfile::window_duration, py::arg("s0"), py::arg("s1"))
      .def("t_at", &kmp::TimeProfile::t_at, py::arg("s"))
      .def("s_at", &kmp::TimeProfile::s_at, py::arg("t"))
      .def("time_scale",
           [](const kmp::TimeProfile& p, double pct, double t0, double t1, const std::string& mode) {
             return kmp::time_scale(p, pct, t0, t1, scale_mode(mode));
           },
           py::arg("percentage"), py::arg("t_start"), py::arg("t_end"), py::arg("mode"));

  py::class_<kmp::KmpModel>(m, "KmpModel")
      .def_static("from_json", [](const std::string& text) { return kmp::model_from_json(json::parse(text)); })
      .def("to_json", [](const kmp::KmpModel& k) { return kmp::model_to_json(k).dump(); })
      .def("predict_mean", &kmp::KmpModel::predict_mean, py::arg("s"))
      .def("predict_covariance", &kmp::KmpModel::predict_covariance, py::arg("s"))
      .def("add_via_point",
           [](kmp::KmpModel& k, double s, const Vector7d& mu, double gamma) { return k.add_via_point(s, mu, gamma); },
           py::arg("s"), py::arg("mu"), py::arg("gamma") = kmp::kDefaultViaPrecision)
      .def("remove_via_point", &kmp::KmpModel::remove_via_point, py::arg("id"))
      .def("adapt_via_point", &kmp::KmpModel::adapt_via_point, py::arg("id"), py::arg("mu"))
      .def("clear_via_points", &kmp::KmpModel::clear_via_points)
      .def_property_readonly("via_point_ids",
                             [](const kmp::KmpModel& k) {
                               std::vector<int> ids;
                               for (const auto& v : k.via_points()) ids.push_back(v.id);
                               return ids;
                             })
      .def_property_readonly("reference_count", [](const kmp::KmpModel& k) { return k.references().size(); })
      .def("sample",
           [](const kmp::KmpModel& k, int n, const kmp::TimeProfile& profile) {
             return trajectory_to_array(kmp::sample_trajectory(k, n, profile));
           },
           py::arg("n") = 500, py::arg("profile") = kmp::TimeProfile(),
           "Rows of t, s, x, y, z, qw, qx, qy, qz equispaced in wall-clock time.");

  m.def("repulsion_via_points",
        [](kmp::KmpModel& k, const Vector3d& center, double radius, double margin) {
          kmp::RepulsionOptions opts;
          opts.margin = margin;
          return kmp::repulsion_via_points(k, center, radius, opts);
        },
        py::arg("model"), py::arg("center"), py::arg("radius"), py::arg("margin") = kmp::RepulsionOptions{}.margin);

  py::class_<intention::EnergyTankBank>(m, "EnergyTankBank")
      .def(py::init<>())
      .def("step",
           [](intention::EnergyTankBank& b, const Vector6d& w, const Vector6d& v, const Vector6d& var, double dt) {
             const auto s = b.step(w, v, var, dt);
             return py::make_tuple(Vector6d(s.h), s.triggered_axes);
           },
           py::arg("wrench"), py::arg("velocity"), py::arg("variance"), py::arg("dt"))
      .def("energy", &intention::EnergyTankBank::energy, py::arg("axis"))
      .def("set_energy", &intention::EnergyTankBank::set_energy, py::arg("axis"), py::arg("energy"))
      .def("reset", [](intention::EnergyTankBank& b) { b.reset(); });

  py::class_<ergodic::ErgodicController>(m, "ErgodicController")
      .def(py::init([](int grid, const std::vector<std::tuple<double, double, double, double>>& bumps, int modes) {
             std::vector<ergodic::TargetDistribution::Bump> bs;
             for (const auto& [x, y, sigma, w] : bumps) bs.push_back({ergodic::Vector2d(x, y), sigma, w});
             const auto target = bs.empty() ? ergodic::TargetDistribution::uniform(grid)
                                            : ergodic::TargetDistribution::gaussian_mixture(grid, bs);
             ergodic::ControllerOptions opts;
             opts.modes = modes;
             return ergodic::ErgodicController(target, opts);
           }),
           py::arg("grid") = 64, py::arg("bumps") = std::vector<std::tuple<double, double, double, double>>{},
           py::arg("modes") = 15, "Uniform target unless bumps (x, y, sigma, weight) are given.")
      .def("start", &ergodic::ErgodicController::start)
      .def("stop", &ergodic::ErgodicController::stop)
      .def("step", &ergodic::ErgodicController::step, py::arg("dt"))
      .def("set_exec_state", &ergodic::ErgodicController::set_exec_state, py::arg("state"))
      .def("metric", &ergodic::ErgodicController::metric)
      .def_property_readonly("time", &ergodic::ErgodicController::time)
      .def_property_readonly("position", [](const ergodic::ErgodicController& c) { return Eigen::Vector2d(c.position()); })
      .def_property_readonly("coverage", [](const ergodic::ErgodicController& c) { return Eigen::VectorXd(c.coverage()); })
      .def_property_readonly("exec", [](const ergodic::ErgodicController& c) { return std::string(ergodic::to_string(c.exec())); })
      .def("visit_histogram", [](const ergodic::ErgodicController& c) { return Eigen::MatrixXd(c.visit_histogram()); })
      .def("set_velocity", [](ergodic::ErgodicController& c, double v) { c.setpoints().set_velocity(v); })
      .def("set_force", [](ergodic::ErgodicController& c, double f) { c.setpoints().set_force(f); })
      .def("set_stiffness", [](ergodic::ErgodicController& c, double k) { c.setpoints().set_stiffness(k); })
      .def_property_readonly("setpoints", [](const ergodic::ErgodicController& c) {
        const auto& sp = c.setpoints();
        py::dict d;
        d["velocity"] = sp.velocity();
        d["force"] = sp.force();
        d["stiffness_tangential"] = sp.stiffness_tangential();
        d["stiffness_normal"] = sp.stiffness_normal();
        return d;
      });

  // JSON crosses the boundary as text; the Python package wraps these.
  m.def("_tool_schemas", [] { return gateway::register_builtin_tools().function_schemas().dump(); });
  m.def("_validate_tool_call", [](const std::string& tool, const std::string& args) {
    const auto registry = gateway::register_builtin_tools();
    const auto v = gateway::validate_call(registry, {tool, json::parse(args), gateway::CallOrigin::test});
    return py::make_tuple(v.ok, v.ok ? std::string() : v.message);
  });
  m.def("_mock_respond", [](const std::string& request) {
    gateway::MockBackend mock;
    return mock.respond(json::parse(request)).dump();
  });
  m.def("_envelope_roundtrip", [](const std::string& text) { return bridge::serialize(bridge::parse(text)); });

  py::class_<engine::Engine>(m, "_Engine")
      .def(py::init([](const std::string& config, const std::string& base_dir) {
        return std::make_unique<engine::Engine>(cli::engine_config_from_json(json::parse(config), base_dir));
      }))
      .def("call", [](engine::Engine& e, const std::string& service, const std::string& payload) {
        return e.call(service, json::parse(payload)).dump();
      })
      .def("tick", &engine::Engine::tick)
      .def("active", &engine::Engine::active)
      .def("status", [](const engine::Engine& e) { return e.status_json().dump(); });

  m.def("_run_scenario", [](const std::string& path, std::optional<std::uint64_t> seed, const std::string& out_dir) {
    std::ostringstream log;
    const auto r = cli::run_scenario_file(path, {seed, out_dir, "."}, log);
    return py::make_tuple(r.exit_code, r.message, log.str());
  });
}
