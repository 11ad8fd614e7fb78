#include "arm4/kinematics.hpp"

#include <algorithm>
#include <cmath>

namespace arm4 {

namespace {

// Cosine-law arguments this far outside [-1, 1] are rounding, not geometry.
constexpr double kCosineSlack = 1e-12;
constexpr double kAxisTolerance = 1e-12;

}  // namespace

JointAngles ik(const ArmGeometry& geom, const SpatialPointd& target,
               double tool_pitch) {
  geom.validate();
  if (!target.allFinite() || !std::isfinite(tool_pitch)) {
    throw InvalidArgument("ik target and pitch must be finite");
  }

  const double radial = std::hypot(target.x(), target.y());
  const double wrist_x = radial - geom.L3 * std::sin(tool_pitch);
  const double wrist_y = target.z() - geom.L3 * std::cos(tool_pitch);

  double yaw = 0.0;
  if (radial > kAxisTolerance) {
    yaw = std::atan2(target.x(), target.y());
  } else if (std::abs(wrist_x) > kAxisTolerance) {
    throw SingularYaw("target lies on the yaw axis but the wrist offset is radial");
  }

  const double cosine =
      (wrist_x * wrist_x + wrist_y * wrist_y - geom.L1 * geom.L1 - geom.L2 * geom.L2) /
      (2.0 * geom.L1 * geom.L2);
  if (!(std::abs(cosine) <= 1.0 + kCosineSlack)) {
    throw Unreachable("wrist point outside the reachable annulus");
  }

  const double elbow = -std::acos(std::clamp(cosine, -1.0, 1.0));
  const double shoulder =
      std::atan2(wrist_x, wrist_y) -
      std::atan2(geom.L2 * std::sin(elbow), geom.L1 + geom.L2 * std::cos(elbow));
  const double wrist = tool_pitch - shoulder - elbow;
  return JointAngles(yaw, shoulder, elbow, wrist);
}

}  // namespace arm4
