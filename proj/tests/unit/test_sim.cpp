#include <doctest.h>

#include <cmath>
#include <numbers>

#include "skilladapt/error.hpp"
#include "skilladapt/kmp/gmm.hpp"
#include "skilladapt/sim/demonstration.hpp"
#include "skilladapt/sim/executor.hpp"
#include "skilladapt/sim/fixtures.hpp"
#include "skilladapt/sim/impedance.hpp"
#include "synthetic.hpp"

using namespace skilladapt;
using namespace skilladapt::sim;
using skilladapt::testing::line_demo;
using skilladapt::testing::quat_about_z;

namespace {

Vector7d pose(double x, double y, double z) {
  Vector7d p;
  p << x, y, z, 1.0, 0.0, 0.0, 0.0;
  return p;
}

// Slow sweep along +y: 0.4 m over 10 s nominal, 0.04 m/s.
kmp::KmpModel sweep_model() {
  std::vector<kmp::Demonstration> demos;
  for (int k = 0; k < 3; ++k) {
    demos.push_back(line_demo({0.45 + 0.002 * k, -0.2, 0.3}, {0.45 + 0.002 * k, 0.2, 0.3}, 200));
  }
  return kmp::KmpModel(kmp::gmr_reference(kmp::fit_gmm(demos, 5), 100));
}

}  // namespace

TEST_SUITE("impedance") {
  TEST_CASE("critically damped step response has no overshoot") {
    EffectorState s;
    ImpedanceParams imp;
    const Vector7d target = pose(0.01, 0.0, 0.0);
    double peak = 0.0;
    for (int i = 0; i < 4000; ++i) {
      s = step(s, target, imp, Vector6d::Zero(), 0.0025);
      peak = std::max(peak, s.pos.x());
    }
    CHECK(peak - 0.01 < 1e-3 * 0.01);
    CHECK(std::abs(s.pos.x() - 0.01) < 1e-8);
  }

  TEST_CASE("constant force gives the static offset f/K") {
    EffectorState s;
    ImpedanceParams imp;
    Vector6d w = Vector6d::Zero();
    w(0) = 31.0;
    for (int i = 0; i < 4000; ++i) s = step(s, pose(0, 0, 0), imp, w, 0.0025);
    CHECK(s.pos.x() == doctest::Approx(0.031).epsilon(1e-6));
  }

  TEST_CASE("released axis still settles") {
    EffectorState s;
    s.vel(1) = 0.2;
    ImpedanceParams imp;
    imp.k_f(1) = 0.0;
    for (int i = 0; i < 4000; ++i) s = step(s, pose(0, 0, 0), imp, Vector6d::Zero(), 0.0025);
    CHECK(std::abs(s.vel(1)) < 1e-9);
  }

  TEST_CASE("energy is non-increasing without external input") {
    EffectorState s;
    s.pos = {0.02, -0.01, 0.005};
    s.quat = quat_about_z(0.2);
    s.vel << 0.1, 0.0, -0.05, 0.3, 0.0, 0.1;
    ImpedanceParams imp;
    const Vector7d target = pose(0, 0, 0);
    double prev = impedance_energy(s, target, imp);
    double worst = 0.0;
    for (int i = 0; i < 4000; ++i) {
      s = step(s, target, imp, Vector6d::Zero(), 0.0025);
      const double e = impedance_energy(s, target, imp);
      worst = std::max(worst, e - prev);
      prev = e;
    }
    CHECK(worst <= 1e-9);
  }

  TEST_CASE("orientation error is the shortest rotation") {
    const Vector3d e = orientation_error(quat_about_z(0.3), quat_about_z(0.1));
    CHECK(e.z() == doctest::Approx(0.2));
    const Vector3d flipped = orientation_error(-quat_about_z(0.3), quat_about_z(0.1));
    CHECK(flipped.z() == doctest::Approx(0.2));
  }

  TEST_CASE("dt outside the allowed range is rejected") {
    EffectorState s;
    CHECK_THROWS_AS(step(s, pose(0, 0, 0), {}, Vector6d::Zero(), 0.0), Error);
    CHECK_THROWS_AS(step(s, pose(0, 0, 0), {}, Vector6d::Zero(), 0.02), Error);
  }
}

TEST_SUITE("executor") {
  TEST_CASE("slow trajectory is tracked closely") {
    auto model = sweep_model();
    intention::EnergyTankBank hid;
    Executor ex(model, kmp::TimeProfile(20.0), hid);
    ex.run();
    CHECK(ex.status().state == RunState::done);
    CHECK(ex.max_tracking_error() < 2e-3);
    CHECK(ex.inserted_via_points().empty());
  }

  TEST_CASE("15 N push inserts exactly one via-point on the pushed axis") {
    auto model = sweep_model();
    intention::EnergyTankBank hid;
    Executor ex(model, kmp::TimeProfile(10.0), hid);
    ex.advance(1600);  // 4 s
    Vector6d w = Vector6d::Zero();
    w(1) = 15.0;
    ex.inject_wrench(w, 2.0);
    std::vector<kmp::ViaPoint> vias;
    ex.on_via_point = [&](const kmp::ViaPoint& v) { vias.push_back(v); };
    ex.run();
    REQUIRE(vias.size() == 1);
    const Vector7d before = sweep_model().predict_mean(vias[0].s_bar);
    const Vector7d shift = vias[0].mu_bar - before;
    CHECK(std::abs(shift(1)) > 1e-3);
    CHECK(std::abs(shift(0)) < 1e-6);
    CHECK(std::abs(shift(2)) < 1e-6);
    CHECK(vias[0].source == kmp::ViaSource::physical);
    CHECK(std::abs(model.predict_mean(vias[0].s_bar)(1) - vias[0].mu_bar(1)) < 1e-3);
    CHECK(ex.status().stiffness.k_f == Vector3d::Constant(1000.0));
    CHECK(ex.status().stiffness.k_t == Vector3d::Constant(100.0));
  }

  TEST_CASE("7 N push stays inside the dead zone") {
    auto model = sweep_model();
    intention::EnergyTankBank hid;
    Executor ex(model, kmp::TimeProfile(10.0), hid);
    ex.advance(1600);
    Vector6d w = Vector6d::Zero();
    w(1) = 7.0;
    ex.inject_wrench(w, 2.0);
    ex.run();
    CHECK(ex.inserted_via_points().empty());
    CHECK(model.via_points().empty());
  }

  TEST_CASE("abort stops at a step boundary and resets stiffness") {
    auto model = sweep_model();
    intention::EnergyTankBank hid;
    Executor ex(model, kmp::TimeProfile(10.0), hid);
    ex.advance(100);
    ex.abort();
    CHECK_FALSE(ex.advance(100));
    CHECK(ex.status().state == RunState::aborted);
    CHECK(ex.steps() == 100);
    CHECK(ex.status().stiffness.k_f == Vector3d::Constant(1000.0));
  }
}

TEST_SUITE("demonstrations") {
  TEST_CASE("resampling enforces minimum spacing") {
    std::vector<kmp::DemoSample> raw;
    for (int i = 0; i < 10000; ++i) {
      const double a = 0.002 * i;
      kmp::DemoSample s;
      s.t = 0.001 * i;
      s.pos = {0.4 + 0.05 * std::cos(a), 0.05 * std::sin(a), 0.2 + 1e-5 * i};
      s.quat = i % 2 ? Vector4d(-quat_about_z(0.1)) : quat_about_z(0.1);
      raw.push_back(s);
      if (i % 7 == 0) raw.push_back(s);  // duplicates
    }
    const auto d = record_demonstration(raw);
    REQUIRE(d.samples.size() > 2);
    for (std::size_t i = 1; i < d.samples.size(); ++i) {
      CHECK((d.samples[i].pos - d.samples[i - 1].pos).norm() >= 0.001 - 1e-12);
      CHECK(d.samples[i].t > d.samples[i - 1].t);
      CHECK(d.samples[i].quat.dot(d.samples[i - 1].quat) > 0.0);
    }
    CHECK(d.samples.front().t == 0.0);
    CHECK(d.samples.back().t == 1.0);
  }

  TEST_CASE("too few samples are rejected") {
    std::vector<kmp::DemoSample> raw(5);
    CHECK_THROWS_AS(record_demonstration(raw), Error);
  }

  TEST_CASE("dtw recovers a time-dilated copy") {
    kmp::Demonstration ref;
    kmp::Demonstration slow;
    const auto curve = [](double u) {
      return Vector3d(0.4 + 0.1 * u, 0.1 * std::sin(2.0 * std::numbers::pi * u), 0.2 + 0.05 * u * u);
    };
    const int n = 200;
    for (int i = 0; i < n; ++i) {
      kmp::DemoSample s;
      s.t = static_cast<double>(i) / (n - 1);
      s.pos = curve(s.t);
      ref.samples.push_back(s);
    }
    // Twice as many samples over the same path, eased so the warp is not affine.
    for (int i = 0; i < 2 * n; ++i) {
      kmp::DemoSample s;
      const double u = static_cast<double>(i) / (2 * n - 1);
      s.t = u;
      s.pos = curve(u * u * (3.0 - 2.0 * u));
      slow.samples.push_back(s);
    }
    const std::vector<kmp::Demonstration> demos{ref, slow};
    const auto aligned = dtw_align(demos);
    REQUIRE(aligned.size() == 2);
    REQUIRE(aligned[1].samples.size() == ref.samples.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < ref.samples.size(); ++i) {
      worst = std::max(worst, (aligned[1].samples[i].pos - ref.samples[i].pos).norm());
      CHECK(aligned[1].samples[i].t == ref.samples[i].t);
    }
    CHECK(worst < 2e-3);
  }

  TEST_CASE("dtw of a demonstration with itself is the diagonal") {
    const auto d = line_demo({0, 0, 0}, {0.1, 0.2, 0}, 50);
    const auto w = dtw(d, d);
    CHECK(w.cost == doctest::Approx(0.0));
    REQUIRE(w.pairs.size() == 50);
    for (int i = 0; i < 50; ++i) CHECK(w.pairs[static_cast<std::size_t>(i)] == std::pair{i, i});
  }
}

TEST_SUITE("fixtures") {
  std::vector<Vector3d> straight_path() {
    std::vector<Vector3d> p;
    for (int i = 0; i <= 100; ++i) p.emplace_back(0.4, -0.2 + 0.004 * i, 0.3);
    return p;
  }

  TEST_CASE("trajectory fixture is zero on the path and scales with precision") {
    const auto path = straight_path();
    std::vector<Eigen::Matrix3d> cov(path.size(), 1e-4 * Eigen::Matrix3d::Identity());
    std::vector<Eigen::Matrix3d> cov2(path.size(), 2e-4 * Eigen::Matrix3d::Identity());
    TrajectoryFixture f(path, cov);
    TrajectoryFixture g(path, cov2);
    CHECK(f.wrench(path[40]).norm() < 1e-12);
    const Vector3d off = path[40] + Vector3d(0.01, 0.0, 0.0);
    CHECK(f.wrench(off).x() == doctest::Approx(-1.0));
    CHECK(g.wrench(off).x() == doctest::Approx(0.5 * f.wrench(off).x()));
  }

  TEST_CASE("fixture built from demonstrations pulls toward the demos") {
    std::vector<kmp::Demonstration> demos;
    for (int k = 0; k < 3; ++k) demos.push_back(line_demo({0.4 + 0.003 * k, -0.2, 0.3}, {0.4 + 0.003 * k, 0.2, 0.3}, 100));
    const auto f = TrajectoryFixture::from_demonstrations(demos, 4, 100);
    const Vector3d w = f.wrench({0.45, 0.0, 0.3});
    CHECK(w.x() < 0.0);
  }

  TEST_CASE("velocity fixture reproduces demonstrated velocity") {
    std::vector<kmp::Demonstration> demos;
    for (int k = 0; k < 3; ++k) demos.push_back(line_demo({0.4 + 0.003 * k, -0.2, 0.3}, {0.4 + 0.003 * k, 0.2, 0.3}, 100));
    VelocityFixture f(demos);
    const Vector3d v = f.desired_velocity({0.403, 0.0, 0.3});
    CHECK(v.y() == doctest::Approx(0.04).epsilon(0.1));
    FixtureSet set;
    set.add(f);
    EffectorState s;
    s.pos = {0.403, 0.0, 0.3};
    CHECK(set.wrench(s)(1) > 0.0);
  }

  TEST_CASE("at most ten fixtures are active") {
    const auto path = straight_path();
    std::vector<Eigen::Matrix3d> cov(path.size(), 1e-4 * Eigen::Matrix3d::Identity());
    FixtureSet set;
    for (int i = 0; i < 10; ++i) set.add(TrajectoryFixture(path, cov));
    try {
      set.add(TrajectoryFixture(path, cov));
      FAIL("expected TooManyFixtures");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::TooManyFixtures);
    }
    CHECK(set.size() == 10);
  }
}
