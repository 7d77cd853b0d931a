#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "skilladapt/kmp/types.hpp"

namespace skilladapt::sim {

inline constexpr double kResampleDistance = 0.001;  // m

// Drops samples closer than `min_distance` to the last kept one, rescales
// time to [0, 1] and aligns quaternion hemispheres. Throws TooFewSamples if
// fewer than two samples are given or survive.
kmp::Demonstration record_demonstration(std::span<const kmp::DemoSample> path,
                                        double min_distance = kResampleDistance);

struct WarpPath {
  std::vector<std::pair<int, int>> pairs;  // (reference index, other index), monotone
  double cost = 0.0;
};

// Standard DTW on Euclidean position distance.
WarpPath dtw(const kmp::Demonstration& reference, const kmp::Demonstration& other);

// Warps every demonstration onto the first one's time axis. Each reference
// index receives the mean of the samples matched to it.
std::vector<kmp::Demonstration> dtw_align(std::span<const kmp::Demonstration> demos);

}  // namespace skilladapt::sim

namespace skilladapt::sim {

// Deterministic teleoperation-like recordings for the shipped skills
// ("sweep", "reach", "pick_place"): `count` demos of `samples` poses over
// `duration` seconds with seeded position jitter. InvalidArgument for other
// names.
std::vector<kmp::Demonstration> synthetic_demonstrations(const std::string& skill, int count = 3, int samples = 200,
                                                         std::uint64_t seed = 7, double duration = 10.0);

}  // namespace skilladapt::sim
