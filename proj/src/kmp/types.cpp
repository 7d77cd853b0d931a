#include "skilladapt/kmp/types.hpp"

#include <cmath>
#include <string>

#include "skilladapt/error.hpp"

namespace skilladapt::kmp {

Vector7d DemoSample::pose() const {
  Vector7d p;
  p << pos, quat;
  return p;
}

void validate(const Demonstration& demo) {
  const auto& xs = demo.samples;
  if (xs.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "demonstration needs at least 2 samples");
  }
  if (xs.front().t != 0.0 || xs.back().t != 1.0) {
    throw Error(ErrorCode::InvalidArgument, "demonstration time must span exactly [0, 1]");
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0 && !(xs[i].t > xs[i - 1].t)) {
      throw Error(ErrorCode::InvalidArgument,
                  "demonstration time not strictly increasing at sample " + std::to_string(i));
    }
    if (std::abs(xs[i].quat.norm() - 1.0) > 1e-9) {
      throw Error(ErrorCode::InvalidArgument,
                  "non-unit quaternion at sample " + std::to_string(i));
    }
    if (!xs[i].pos.allFinite()) {
      throw Error(ErrorCode::InvalidArgument, "non-finite position at sample " + std::to_string(i));
    }
  }
}

void align_hemispheres(Demonstration& demo) {
  for (std::size_t i = 1; i < demo.samples.size(); ++i) {
    if (demo.samples[i].quat.dot(demo.samples[i - 1].quat) < 0.0) {
      demo.samples[i].quat = -demo.samples[i].quat;
    }
  }
}

const char* to_string(ViaSource source) noexcept {
  switch (source) {
    case ViaSource::physical: return "physical";
    case ViaSource::language: return "language";
    case ViaSource::graphical: return "graphical";
  }
  return "graphical";
}

ViaSource via_source_from_string(const std::string& name) {
  if (name == "physical") return ViaSource::physical;
  if (name == "language") return ViaSource::language;
  if (name == "graphical") return ViaSource::graphical;
  throw Error(ErrorCode::InvalidArgument, "unknown via-point source '" + name + "'");
}

void normalize_quaternion(Vector7d& pose) {
  auto q = pose.segment<4>(3);
  const double n = q.norm();
  if (n > 0.0) q /= n;
}

}  // namespace skilladapt::kmp
