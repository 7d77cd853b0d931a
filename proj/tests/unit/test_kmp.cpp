#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "skilladapt/error.hpp"
#include "skilladapt/kmp/block_cholesky.hpp"
#include "skilladapt/kmp/gmm.hpp"
#include "skilladapt/kmp/io.hpp"
#include "skilladapt/kmp/kmp_model.hpp"
#include "skilladapt/kmp/repulsion.hpp"
#include "skilladapt/kmp/time_profile.hpp"
#include "synthetic.hpp"

using namespace skilladapt;
using namespace skilladapt::kmp;
using skilladapt::testing::DenseOracle;

namespace {

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

Eigen::MatrixXd random_spd_matrix(std::mt19937& rng, int n) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  return a * a.transpose() + n * Eigen::MatrixXd::Identity(n, n);
}

KmpModel sinusoid_model(int n_refs = 100) {
  const auto demos = skilladapt::testing::sinusoid_demos(3, 200);
  const auto gmm = fit_gmm(demos, 6);
  return KmpModel(gmr_reference(gmm, n_refs));
}

Vector7d pose(double x, double y, double z, double yaw = 0.0) {
  Vector7d p;
  p << x, y, z, skilladapt::testing::quat_about_z(yaw);
  return p;
}

}  // namespace

TEST_SUITE("block cholesky") {
  TEST_CASE("block removal matches a fresh factorization") {
    std::mt19937 rng(3);
    const Eigen::MatrixXd a = random_spd_matrix(rng, 35);
    BlockCholesky chol(a, 7);
    chol.remove_block(2);
    Eigen::MatrixXd reduced(28, 28);
    const std::vector<int> keep{0, 1, 3, 4};
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) reduced.block(7 * i, 7 * j, 7, 7) = a.block(7 * keep[i], 7 * keep[j], 7, 7);
    const Eigen::MatrixXd l = chol.factor();
    CHECK(max_abs(l * l.transpose() - reduced) < 1e-10);
  }

  TEST_CASE("bordered append reproduces the grown matrix") {
    std::mt19937 rng(4);
    const Eigen::MatrixXd a = random_spd_matrix(rng, 28);
    BlockCholesky chol(a.topLeftCorner(21, 21), 7);
    chol.append_block(a.block(0, 21, 21, 7), a.block(21, 21, 7, 7));
    const Eigen::MatrixXd l = chol.factor();
    CHECK(max_abs(l * l.transpose() - a) < 1e-10);
    const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(28, -1.0, 1.0);
    CHECK(max_abs(a * chol.solve(b) - b) < 1e-9);
  }

  TEST_CASE("non positive definite input is rejected") {
    Eigen::MatrixXd a = -Eigen::MatrixXd::Identity(7, 7);
    CHECK_THROWS_AS(BlockCholesky(a, 7), Error);
  }
}

TEST_SUITE("gmm") {
  TEST_CASE("log-likelihood never decreases") {
    const auto demos = skilladapt::testing::sinusoid_demos(3, 150);
    const auto gmm = fit_gmm(demos, 5);
    REQUIRE(gmm.log_likelihood_trace.size() >= 2);
    for (std::size_t i = 1; i < gmm.log_likelihood_trace.size(); ++i) {
      CHECK(gmm.log_likelihood_trace[i] >= gmm.log_likelihood_trace[i - 1] - 1e-9);
    }
  }

  TEST_CASE("separated clusters are recovered") {
    std::mt19937 rng(11);
    std::normal_distribution<double> g(0.0, 0.1);
    Eigen::MatrixXd data(400, 2);
    for (int i = 0; i < 400; ++i) {
      const double c = i < 200 ? -3.0 : 3.0;
      data(i, 0) = c + g(rng);
      data(i, 1) = g(rng);
    }
    const auto gmm = fit_gmm(data, 2);
    std::vector<double> centers{gmm.components[0].mean(0), gmm.components[1].mean(0)};
    std::sort(centers.begin(), centers.end());
    CHECK(centers[0] == doctest::Approx(-3.0).epsilon(0.02));
    CHECK(centers[1] == doctest::Approx(3.0).epsilon(0.02));
    CHECK(gmm.components[0].prior == doctest::Approx(0.5).epsilon(0.01));
  }

  TEST_CASE("fit is deterministic") {
    const auto demos = skilladapt::testing::sinusoid_demos(2, 100);
    const auto a = fit_gmm(demos, 4);
    const auto b = fit_gmm(demos, 4);
    for (std::size_t k = 0; k < a.components.size(); ++k) {
      CHECK(max_abs(a.components[k].mean - b.components[k].mean) == 0.0);
    }
  }

  TEST_CASE("invalid component counts are rejected") {
    Eigen::MatrixXd data = Eigen::MatrixXd::Random(10, 2);
    CHECK_THROWS_AS(fit_gmm(data, 0), Error);
    CHECK_THROWS_AS(fit_gmm(data, 11), Error);
    CHECK_THROWS_AS(fit_gmm(Eigen::MatrixXd(0, 2), 1), Error);
  }

  TEST_CASE("reference follows the demonstrated path") {
    const auto demos = skilladapt::testing::sinusoid_demos(3, 200);
    const auto refs = gmr_reference(fit_gmm(demos, 8), 50);
    REQUIRE(refs.size() == 50);
    CHECK(refs.front().s == 0.0);
    CHECK(refs.back().s == 1.0);
    for (const auto& r : refs) {
      CHECK(std::abs(r.mu(1) - (-0.2 + 0.4 * r.s)) < 0.02);
      CHECK(r.mu.tail<4>().norm() == doctest::Approx(1.0).epsilon(0.05));
    }
  }
}

TEST_SUITE("kmp") {
  TEST_CASE("mean and covariance match a dense solve") {
    std::mt19937 rng(21);
    for (int trial = 0; trial < 5; ++trial) {
      const int n = 10 + 10 * trial;
      KmpModel model(skilladapt::testing::random_refs(rng, n));
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (int v = 0; v < 3; ++v) {
        const double s = u(rng);
        model.add_via_point(s, model.predict_mean(s) + (Vector7d() << 0.02, -0.01, 0.01, 0, 0, 0, 0).finished());
      }
      const DenseOracle oracle(model);
      for (double s : {0.0, 0.13, 0.5, 0.77, 1.0}) {
        CHECK(max_abs(model.predict_mean(s) - oracle.mean(s)) < 1e-10);
        CHECK(max_abs(model.predict_covariance(s) - oracle.covariance(s)) < 1e-10);
      }
    }
  }

  TEST_CASE("trajectory passes through via-points") {
    KmpModel model = sinusoid_model();
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    std::uniform_real_distribution<double> d(-0.05, 0.05);
    for (int i = 0; i < 10; ++i) {
      const double s = u(rng);
      Vector7d target = model.predict_mean(s);
      target.head<3>() += Vector3d(d(rng), d(rng), d(rng));
      const int id = model.add_via_point(s, target);
      const auto& via = model.via_point(id);
      CHECK((model.predict_mean(via.s_bar).head<3>() - via.mu_bar.head<3>()).norm() < 1e-3);
    }
    for (const auto& via : model.via_points()) {
      CHECK((model.predict_mean(via.s_bar).head<3>() - via.mu_bar.head<3>()).norm() < 1e-3);
    }
  }

  TEST_CASE("add then delete restores the original trajectory") {
    KmpModel model = sinusoid_model();
    std::vector<Vector7d> before;
    for (int i = 0; i <= 100; ++i) before.push_back(model.predict_mean(i / 100.0));
    const int a = model.add_via_point(0.3, pose(0.5, 0.0, 0.4));
    const int b = model.add_via_point(0.7, pose(0.4, 0.1, 0.25));
    model.remove_via_point(a);
    model.remove_via_point(b);
    for (int i = 0; i <= 100; ++i) {
      CHECK(max_abs(model.predict_mean(i / 100.0) - before[static_cast<std::size_t>(i)]) < 1e-10);
    }
  }

  TEST_CASE("adaptation is local") {
    KmpModel model = sinusoid_model();
    const Vector7d far_before = model.predict_mean(0.95);
    Vector7d target = model.predict_mean(0.2);
    target(2) += 0.05;
    model.add_via_point(0.2, target);
    CHECK((model.predict_mean(0.95) - far_before).head<3>().norm() < 1e-4);
  }

  TEST_CASE("adapting a via-point moves the passage target") {
    KmpModel model = sinusoid_model();
    const int id = model.add_via_point(0.4, pose(0.5, 0.0, 0.35));
    model.adapt_via_point(id, pose(0.48, 0.0, 0.38));
    CHECK((model.predict_mean(0.4).head<3>() - Vector3d(0.48, 0.0, 0.38)).norm() < 1e-3);
    CHECK(max_abs(model.predict_mean(0.4) - DenseOracle(model).mean(0.4)) < 1e-10);
  }

  TEST_CASE("via-point close to a reference shadows it") {
    KmpModel model = sinusoid_model(100);
    const int id = model.add_via_point(model.references()[40].s + 1e-4, pose(0.5, 0.0, 0.35));
    REQUIRE(model.shadowed_references(id).size() == 1);
    CHECK(model.shadowed_references(id)[0] == 40u);
    CHECK(model.active_size() == 100u);
  }

  TEST_CASE("a via-point with a span supersedes its neighbourhood") {
    KmpModel model = sinusoid_model(100);
    const int id = model.add_via_point(0.5, pose(0.5, 0.0, 0.35), kDefaultViaPrecision, ViaSource::language, 0.1);
    const auto& shadowed = model.shadowed_references(id);
    CHECK(shadowed.size() == 10);
    for (std::size_t i : shadowed) CHECK(std::abs(model.references()[i].s - 0.5) < 0.05 + 0.5 / 100);
    CHECK(model.active_size() == 91u);
    for (double s : {0.0, 0.45, 0.5, 0.8}) CHECK(max_abs(model.predict_mean(s) - DenseOracle(model).mean(s)) < 1e-10);
    model.remove_via_point(id);
    CHECK(model.active_size() == 100u);
  }

  TEST_CASE("covariance shrinks near a via-point") {
    KmpModel model = sinusoid_model();
    const double before = model.predict_covariance(0.5).trace();
    model.add_via_point(0.5, model.predict_mean(0.5));
    CHECK(model.predict_covariance(0.5).trace() < before);
    const auto c = model.predict_covariance(0.3);
    Eigen::SelfAdjointEigenSolver<Matrix7d> es(c);
    CHECK(es.eigenvalues().minCoeff() >= 0.0);
  }

  TEST_CASE("batch covariance equals pointwise covariance") {
    KmpModel model = sinusoid_model(60);
    model.add_via_point(0.25, pose(0.5, -0.1, 0.35));
    const std::vector<double> s{0.0, 0.25, 0.6, 1.0};
    const auto batch = model.predict_covariances(s);
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(max_abs(batch[i] - model.predict_covariance(s[i])) < 1e-12);
    }
  }

  TEST_CASE("input errors") {
    KmpModel model = sinusoid_model(30);
    CHECK_THROWS_AS(model.predict_mean(1.5), Error);
    CHECK_THROWS_AS(model.predict_mean(-0.1), Error);
    CHECK_THROWS_AS(model.remove_via_point(999), Error);
    Vector7d bad = pose(0.5, 0.0, 0.3);
    bad.tail<4>() *= 1.5;
    try {
      model.add_via_point(0.5, bad);
      FAIL("expected NonUnitQuaternion");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonUnitQuaternion);
    }
    try {
      model.add_via_point(2.0, pose(0.5, 0.0, 0.3));
      FAIL("expected InvalidTime");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidTime);
    }
  }

  TEST_CASE("fifty insertions on a 500-point model stay fast") {
    KmpModel model = sinusoid_model(500);
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < 50; ++i) {
      const double s = u(rng);
      Vector7d t = model.predict_mean(s);
      t(2) += 0.01;
      model.add_via_point(s, t);
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    MESSAGE("50 insertions: " << elapsed << " s");
    CHECK(elapsed < 10.0);
  }

  TEST_CASE("model json round trip") {
    KmpModel model = sinusoid_model(40);
    model.add_via_point(0.3, pose(0.5, 0.0, 0.4), 1e-8, ViaSource::physical);
    const auto doc = model_to_json(model);
    const KmpModel copy = model_from_json(doc);
    CHECK(copy.via_points().size() == 1);
    CHECK(copy.via_points()[0].source == ViaSource::physical);
    for (double s : {0.0, 0.3, 0.9}) CHECK(max_abs(copy.predict_mean(s) - model.predict_mean(s)) < 1e-10);
    CHECK(model_to_json(copy) == doc);
  }

  TEST_CASE("demonstration jsonl round trip") {
    const auto demo = skilladapt::testing::sinusoid_demo(0, 20);
    std::stringstream ss;
    write_demonstration(ss, demo);
    const auto back = read_demonstration(ss);
    REQUIRE(back.samples.size() == demo.samples.size());
    CHECK(back.samples[7].pos.isApprox(demo.samples[7].pos));
    std::stringstream bad("{\"t\":0,\"pos\":[1,2],\"quat\":[1,0,0,0]}\n");
    CHECK_THROWS_AS(read_demonstration(bad), Error);
  }
}

TEST_SUITE("time profile") {
  TEST_CASE("slowing a window stretches its duration") {
    const TimeProfile p(10.0);
    const auto slow = time_scale(p, 50.0, 0.2, 0.6, ScaleMode::slow);
    CHECK(slow.window_duration(0.2, 0.6) == doctest::Approx(p.window_duration(0.2, 0.6) / 0.5));
    CHECK(slow.window_duration(0.0, 0.2) == doctest::Approx(2.0));
    CHECK(slow.window_duration(0.6, 1.0) == doctest::Approx(4.0));
    const auto fast = time_scale(p, 25.0, 0.0, 1.0, ScaleMode::fast);
    CHECK(fast.duration() == doctest::Approx(10.0 / 1.25));
  }

  TEST_CASE("retimings compose") {
    const TimeProfile p(10.0);
    const auto a = time_scale(time_scale(p, 50.0, 0.0, 0.5, ScaleMode::slow), 100.0, 0.25, 0.75, ScaleMode::fast);
    CHECK(a.window_duration(0.0, 0.25) == doctest::Approx(5.0));
    CHECK(a.window_duration(0.25, 0.5) == doctest::Approx(2.5));
    CHECK(a.window_duration(0.5, 0.75) == doctest::Approx(1.25));
    CHECK(a.window_duration(0.75, 1.0) == doctest::Approx(2.5));
    for (double s : {0.0, 0.1, 0.3, 0.6, 0.99, 1.0}) CHECK(a.s_at(a.t_at(s)) == doctest::Approx(s));
  }

  TEST_CASE("invalid ranges are rejected") {
    const TimeProfile p;
    CHECK_THROWS_AS(time_scale(p, 0.0, 0.0, 1.0, ScaleMode::slow), Error);
    CHECK_THROWS_AS(time_scale(p, 101.0, 0.0, 1.0, ScaleMode::fast), Error);
    CHECK_THROWS_AS(time_scale(p, 100.0, 0.0, 1.0, ScaleMode::slow), Error);
    CHECK_THROWS_AS(time_scale(p, 10.0, 0.6, 0.4, ScaleMode::slow), Error);
    CHECK_THROWS_AS(time_scale(p, 10.0, -0.1, 0.4, ScaleMode::slow), Error);
  }

  TEST_CASE("sampling is equispaced in wall time") {
    const KmpModel model = sinusoid_model(30);
    const auto profile = time_scale(TimeProfile(10.0), 50.0, 0.0, 0.5, ScaleMode::slow);
    const auto traj = sample_trajectory(model, 151, profile);
    REQUIRE(traj.points.size() == 151);
    CHECK(traj.points.back().t == doctest::Approx(15.0));
    CHECK(traj.points.back().s == doctest::Approx(1.0));
    CHECK(traj.points[100].s == doctest::Approx(0.5));
  }
}

TEST_SUITE("repulsion") {
  TEST_CASE("trajectory clears the sphere after repulsion") {
    KmpModel model = sinusoid_model(200);
    const Vector3d center = model.predict_mean(0.5).head<3>();
    const double radius = 0.075;
    const auto ids = repulsion_via_points(model, center, radius);
    CHECK(!ids.empty());
    double min_dist = 1e9;
    for (int i = 0; i <= 2000; ++i) {
      min_dist = std::min(min_dist, (model.predict_mean(i / 2000.0).head<3>() - center).norm());
    }
    MESSAGE("minimum distance " << min_dist << " with " << ids.size() << " via-points");
    CHECK(min_dist >= radius - 5e-3);
  }

  TEST_CASE("straight line through the sphere center is pushed clear") {
    const auto demo = skilladapt::testing::line_demo(Vector3d(0.4, -0.3, 0.2), Vector3d(0.4, 0.3, 0.2), 200);
    const std::vector<Demonstration> demos{demo};
    KmpModel model(gmr_reference(fit_gmm(demos, 5), 100));
    const Vector3d center(0.4, 0.0, 0.2);
    const auto ids = repulsion_via_points(model, center, 0.1);
    double min_dist = 1e9;
    for (int i = 0; i <= 5000; ++i) {
      min_dist = std::min(min_dist, (model.predict_mean(i / 5000.0).head<3>() - center).norm());
    }
    MESSAGE("minimum distance " << min_dist << " with " << ids.size() << " via-points");
    CHECK(min_dist >= 0.1 - 5e-3);
    for (std::size_t a = 0; a < ids.size(); ++a)
      for (std::size_t b = a + 1; b < ids.size(); ++b)
        CHECK(std::abs(model.via_point(ids[a]).s_bar - model.via_point(ids[b]).s_bar) >= 0.1 - 1e-9);
  }

  TEST_CASE("radius bounds") {
    KmpModel model = sinusoid_model(30);
    CHECK_THROWS_AS(repulsion_via_points(model, Vector3d::Zero(), 0.0), Error);
    CHECK_THROWS_AS(repulsion_via_points(model, Vector3d::Zero(), 1.5), Error);
  }

  TEST_CASE("a sphere away from the path inserts nothing") {
    KmpModel model = sinusoid_model(30);
    CHECK(repulsion_via_points(model, Vector3d(2.0, 2.0, 2.0), 0.1).empty());
  }
}
