#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "arm4/errors.hpp"

namespace arm4 {

template <typename Scalar>
using Vector4 = Eigen::Matrix<Scalar, 4, 1>;

// (radial, height) in the joint plane.
template <typename Scalar>
using PlanarPoint = Eigen::Matrix<Scalar, 2, 1>;

// World frame, Z vertical.
template <typename Scalar>
using SpatialPoint = Eigen::Matrix<Scalar, 3, 1>;

using Vector4d = Vector4<double>;
using PlanarPointd = PlanarPoint<double>;
using SpatialPointd = SpatialPoint<double>;

// Link lengths in meters, base to tool.
struct ArmGeometry {
  double L1 = 1.0;
  double L2 = 1.0;
  double L3 = 1.0;

  void validate() const {
    if (!(L1 > 0.0 && L2 > 0.0 && L3 > 0.0) || !std::isfinite(L1) ||
        !std::isfinite(L2) || !std::isfinite(L3)) {
      throw InvalidArgument("link lengths must be finite and positive");
    }
  }

  double reach() const { return L1 + L2 + L3; }
};

// Wraps to (-pi, pi].
inline double normalize_angle(double angle) {
  double wrapped = std::remainder(angle, 2.0 * std::numbers::pi);
  if (wrapped <= -std::numbers::pi) wrapped += 2.0 * std::numbers::pi;
  // Drops the sign of -0.0.
  return wrapped + 0.0;
}

/// Joint angles in radians. theta1 is base yaw about world Z; theta2..theta4
/// are planar joint angles measured from vertical. Components are normalized
/// to (-pi, pi] on construction.
class JointAngles {
 public:
  JointAngles() : values_(Vector4d::Zero()) {}
  JointAngles(double t1, double t2, double t3, double t4)
      : JointAngles(Vector4d(t1, t2, t3, t4)) {}
  explicit JointAngles(const Vector4d& values) {
    if (!values.allFinite()) throw InvalidArgument("joint angles must be finite");
    for (int i = 0; i < 4; ++i) values_[i] = normalize_angle(values[i]);
  }

  const Vector4d& vector() const { return values_; }
  double operator[](int i) const { return values_[i]; }

 private:
  Vector4d values_;
};

/// Joint positions p1..p4 in the joint plane. Each link hangs off the
/// previous one at the cumulative angle from vertical.
template <typename Scalar>
std::array<PlanarPoint<Scalar>, 4> fk_planar(const ArmGeometry& geom,
                                             const Scalar& theta2,
                                             const Scalar& theta3,
                                             const Scalar& theta4) {
  using std::cos;
  using std::sin;
  const Scalar a2 = theta2;
  const Scalar a3 = a2 + theta3;
  const Scalar a4 = a3 + theta4;

  std::array<PlanarPoint<Scalar>, 4> p;
  p[0] << Scalar(0.0), Scalar(0.0);
  p[1] << geom.L1 * sin(a2), geom.L1 * cos(a2);
  p[2] << p[1].x() + geom.L2 * sin(a3), p[1].y() + geom.L2 * cos(a3);
  p[3] << p[2].x() + geom.L3 * sin(a4), p[2].y() + geom.L3 * cos(a4);
  return p;
}

// Lifts a joint-plane point into the world by the base yaw.
template <typename Scalar>
SpatialPoint<Scalar> lift(const PlanarPoint<Scalar>& p, const Scalar& theta1) {
  using std::cos;
  using std::sin;
  return SpatialPoint<Scalar>(p.x() * sin(theta1), p.x() * cos(theta1), p.y());
}

template <typename Scalar>
std::array<SpatialPoint<Scalar>, 4> fk_spatial(const ArmGeometry& geom,
                                               const Vector4<Scalar>& theta) {
  const auto planar = fk_planar<Scalar>(geom, theta[1], theta[2], theta[3]);
  std::array<SpatialPoint<Scalar>, 4> out;
  for (std::size_t k = 0; k < 4; ++k) out[k] = lift<Scalar>(planar[k], theta[0]);
  return out;
}

inline std::array<SpatialPointd, 4> fk_spatial(const ArmGeometry& geom,
                                               const JointAngles& angles) {
  return fk_spatial<double>(geom, angles.vector());
}

/// Closed-form inverse kinematics with the tool link held at `tool_pitch`
/// from vertical in the joint plane (theta2 + theta3 + theta4 = tool_pitch).
/// The wrist is placed one tool length behind the target and solved as a
/// two-link problem on the elbow-down (negative arccos) branch.
///
/// Throws Unreachable when the wrist is outside the two-link annulus and
/// SingularYaw when the target is on the yaw axis but the wrist is not.
JointAngles ik(const ArmGeometry& geom, const SpatialPointd& target,
               double tool_pitch = 0.0);

}  // namespace arm4
