#include "skilladapt/sim/demonstration.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <limits>

#include "skilladapt/error.hpp"

namespace skilladapt::sim {

kmp::Demonstration record_demonstration(std::span<const kmp::DemoSample> path, double min_distance) {
  if (path.size() < 2) throw Error(ErrorCode::TooFewSamples, "a recording needs at least two poses");
  kmp::Demonstration out;
  out.samples.push_back(path.front());
  for (std::size_t i = 1; i < path.size(); ++i) {
    if ((path[i].pos - out.samples.back().pos).norm() >= min_distance) out.samples.push_back(path[i]);
  }
  if (out.samples.size() < 2) {
    throw Error(ErrorCode::TooFewSamples, "fewer than two poses remain after resampling");
  }
  const double t0 = out.samples.front().t;
  const double span = out.samples.back().t - t0;
  const auto n = out.samples.size();
  for (std::size_t i = 0; i < n; ++i) {
    auto& s = out.samples[i];
    s.t = span > 0.0 ? (s.t - t0) / span : static_cast<double>(i) / static_cast<double>(n - 1);
    s.quat.normalize();
  }
  out.samples.front().t = 0.0;
  out.samples.back().t = 1.0;
  kmp::align_hemispheres(out);
  return out;
}

WarpPath dtw(const kmp::Demonstration& reference, const kmp::Demonstration& other) {
  const auto n = reference.samples.size();
  const auto m = other.samples.size();
  if (n == 0 || m == 0) throw Error(ErrorCode::EmptyData, "cannot warp an empty demonstration");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> d((n + 1) * (m + 1), inf);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return d[i * (m + 1) + j]; };
  at(0, 0) = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const double c = (reference.samples[i - 1].pos - other.samples[j - 1].pos).norm();
      at(i, j) = c + std::min({at(i - 1, j - 1), at(i - 1, j), at(i, j - 1)});
    }
  }
  WarpPath path;
  path.cost = at(n, m);
  std::size_t i = n, j = m;
  while (i > 0 && j > 0) {
    path.pairs.emplace_back(static_cast<int>(i - 1), static_cast<int>(j - 1));
    if (i == 1 && j == 1) break;
    const double diag = at(i - 1, j - 1), up = at(i - 1, j), left = at(i, j - 1);
    if (diag <= up && diag <= left) {
      --i;
      --j;
    } else if (up <= left) {
      --i;
    } else {
      --j;
    }
  }
  std::reverse(path.pairs.begin(), path.pairs.end());
  return path;
}

std::vector<kmp::Demonstration> dtw_align(std::span<const kmp::Demonstration> demos) {
  if (demos.size() < 2) throw Error(ErrorCode::TooFewSamples, "alignment needs at least two demonstrations");
  const auto& ref = demos.front();
  std::vector<kmp::Demonstration> out;
  out.push_back(ref);
  for (std::size_t k = 1; k < demos.size(); ++k) {
    const auto path = dtw(ref, demos[k]);
    kmp::Demonstration warped;
    warped.samples.resize(ref.samples.size());
    std::vector<int> count(ref.samples.size(), 0);
    for (auto& s : warped.samples) {
      s.pos.setZero();
      s.quat.setZero();
    }
    for (const auto& [i, j] : path.pairs) {
      auto& dst = warped.samples[static_cast<std::size_t>(i)];
      const auto& src = demos[k].samples[static_cast<std::size_t>(j)];
      dst.pos += src.pos;
      const Vector4d q = count[static_cast<std::size_t>(i)] > 0 && dst.quat.dot(src.quat) < 0.0 ? Vector4d(-src.quat) : src.quat;
      dst.quat += q;
      if (src.wrench) dst.wrench = dst.wrench.value_or(Vector6d::Zero()) + *src.wrench;
      ++count[static_cast<std::size_t>(i)];
    }
    for (std::size_t i = 0; i < warped.samples.size(); ++i) {
      auto& s = warped.samples[i];
      const double c = static_cast<double>(count[i]);
      s.t = ref.samples[i].t;
      s.pos /= c;
      s.quat.normalize();
      if (s.wrench) *s.wrench /= c;
    }
    out.push_back(std::move(warped));
  }
  return out;
}

}  // namespace skilladapt::sim

namespace skilladapt::sim {

std::vector<kmp::Demonstration> synthetic_demonstrations(const std::string& skill, int count, int samples,
                                                         std::uint64_t seed, double duration) {
  if (count < 1 || samples < 2) throw Error(ErrorCode::InvalidArgument, "need at least one demo of two samples");
  const auto quat_z = [](double a) { return Vector4d(std::cos(a / 2.0), 0.0, 0.0, std::sin(a / 2.0)); };
  std::vector<kmp::Demonstration> out;
  for (int k = 0; k < count; ++k) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(k));
    std::normal_distribution<double> jitter(0.0, 0.001);
    const double v = static_cast<double>(k) - 0.5 * (count - 1);
    kmp::Demonstration d;
    for (int i = 0; i < samples; ++i) {
      const double u = static_cast<double>(i) / (samples - 1);
      kmp::DemoSample s;
      s.t = u * duration;
      if (skill == "sweep") {
        const double amp = 0.05 * (1.0 + 0.1 * v);
        s.pos = {0.45 + 0.01 * v, -0.2 + 0.4 * u, 0.3 + amp * std::sin(std::numbers::pi * u)};
        s.quat = quat_z(0.3 * u + 0.02 * v);
      } else if (skill == "reach") {
        s.pos = {0.4 + 0.003 * v, -0.3 + 0.6 * u, 0.2 + 0.003 * v};
        s.quat = quat_z(0.0);
      } else if (skill == "pick_place") {
        s.pos = {0.35 + 0.2 * u, 0.2 - 0.4 * u + 0.005 * v, 0.15 + (0.15 + 0.01 * v) * std::sin(std::numbers::pi * u)};
        s.quat = quat_z(0.5 * std::numbers::pi * u);
      } else {
        throw Error(ErrorCode::InvalidArgument, "unknown synthetic skill '" + skill + "'");
      }
      s.pos += Vector3d(jitter(rng), jitter(rng), jitter(rng));
      d.samples.push_back(s);
    }
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace skilladapt::sim
