#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "arm4/kinematics.hpp"

namespace arm4 {
namespace {

constexpr double kPi = std::numbers::pi;
const ArmGeometry kUnit{1.0, 1.0, 1.0};

void ExpectPoint(const Eigen::VectorXd& actual, const Eigen::VectorXd& expected,
                 double tol = 1e-12) {
  ASSERT_EQ(actual.size(), expected.size());
  EXPECT_LE((actual - expected).cwiseAbs().maxCoeff(), tol)
      << "actual " << actual.transpose() << " expected " << expected.transpose();
}

TEST(ForwardKinematics, PlanarStraightUp) {
  const auto p = fk_planar<double>(kUnit, 0.0, 0.0, 0.0);
  ExpectPoint(p[0], PlanarPointd(0, 0));
  ExpectPoint(p[3], PlanarPointd(0, 3));
}

TEST(ForwardKinematics, PlanarHorizontal) {
  const auto p = fk_planar<double>(kUnit, kPi / 2, 0.0, 0.0);
  ExpectPoint(p[3], PlanarPointd(3, 0));
}

TEST(ForwardKinematics, PlanarElbowBent) {
  const auto p = fk_planar<double>(kUnit, kPi / 2, -kPi / 2, 0.0);
  ExpectPoint(p[1], PlanarPointd(1, 0));
  ExpectPoint(p[2], PlanarPointd(1, 1));
  ExpectPoint(p[3], PlanarPointd(1, 2));
}

TEST(ForwardKinematics, SpatialOnAxisIgnoresYaw) {
  for (double yaw : {0.0, 0.7, -2.5, kPi}) {
    const auto P = fk_spatial(kUnit, JointAngles(yaw, 0, 0, 0));
    ExpectPoint(P[3], SpatialPointd(0, 0, 3));
  }
}

TEST(ForwardKinematics, SpatialExamples) {
  ExpectPoint(fk_spatial(kUnit, JointAngles(0, kPi / 2, 0, 0))[3], SpatialPointd(0, 3, 0));
  ExpectPoint(fk_spatial(kUnit, JointAngles(kPi / 2, kPi / 2, -kPi / 2, 0))[3],
              SpatialPointd(1, 0, 2));
  ExpectPoint(fk_spatial(kUnit, JointAngles(0.3, 0.1, 0.2, 0.3))[0], SpatialPointd(0, 0, 0));
}

TEST(ForwardKinematics, LinkLengthsAndLiftConsistency) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  const ArmGeometry geom{0.7, 1.3, 0.4};
  const double lengths[3] = {geom.L1, geom.L2, geom.L3};
  for (int trial = 0; trial < 500; ++trial) {
    const Vector4d q(angle(rng), angle(rng), angle(rng), angle(rng));
    const auto planar = fk_planar<double>(geom, q[1], q[2], q[3]);
    const auto spatial = fk_spatial<double>(geom, q);
    for (int k = 0; k < 3; ++k) {
      EXPECT_NEAR((planar[k + 1] - planar[k]).norm(), lengths[k], 1e-12);
      EXPECT_NEAR((spatial[k + 1] - spatial[k]).norm(), lengths[k], 1e-12);
    }
    for (int k = 0; k < 4; ++k) {
      EXPECT_NEAR(spatial[k].head<2>().norm(), std::abs(planar[k].x()), 1e-12);
      EXPECT_NEAR(spatial[k].z(), planar[k].y(), 1e-15);
    }
  }
}

TEST(JointAnglesTest, NormalizesIntoHalfOpenInterval) {
  const JointAngles a(3 * kPi, -kPi, 2 * kPi + 0.25, -7.0);
  EXPECT_NEAR(a[0], kPi, 1e-12);
  EXPECT_DOUBLE_EQ(a[1], kPi);
  EXPECT_NEAR(a[2], 0.25, 1e-12);
  EXPECT_NEAR(a[3], -7.0 + 2 * kPi, 1e-12);
  EXPECT_THROW(JointAngles(NAN, 0, 0, 0), InvalidArgument);
}

TEST(InverseKinematics, BentExample) {
  const JointAngles q = ik(kUnit, SpatialPointd(0, 2, 1));
  ExpectPoint(q.vector(), Vector4d(0, kPi / 2, 0, -kPi / 2), 1e-9);
  ExpectPoint(fk_spatial(kUnit, q)[3], SpatialPointd(0, 2, 1), 1e-12);
}

TEST(InverseKinematics, FullyExtendedVertical) {
  const JointAngles q = ik(kUnit, SpatialPointd(0, 0, 3));
  ExpectPoint(q.vector(), Vector4d::Zero(), 1e-12);
}

TEST(InverseKinematics, Unreachable) {
  EXPECT_THROW(ik(kUnit, SpatialPointd(0, 10, 0)), Unreachable);
  EXPECT_THROW(ik(kUnit, SpatialPointd(0, 10, 0), 0.8), Unreachable);
  // Inside the inner hole of the wrist annulus is not reachable either.
  EXPECT_THROW(ik(ArmGeometry{1.0, 0.2, 0.1}, SpatialPointd(0.0, 0.1, 0.1), kPi / 2),
               Unreachable);
}

TEST(InverseKinematics, SingularYaw) {
  // Target on the yaw axis but a tilted tool puts the wrist off axis.
  EXPECT_THROW(ik(kUnit, SpatialPointd(0, 0, 2.5), 0.5), SingularYaw);
  // Wrist on axis too: yaw is set to zero.
  const JointAngles q = ik(kUnit, SpatialPointd(0, 0, 2.5), 0.0);
  EXPECT_EQ(q[0], 0.0);
  ExpectPoint(fk_spatial(kUnit, q)[3], SpatialPointd(0, 0, 2.5), 1e-12);
}

TEST(InverseKinematics, ToolPitchConstraintAndRoundTrip) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> yaw(-kPi, kPi);
  std::uniform_real_distribution<double> shoulder(-1.2, 1.2);
  std::uniform_real_distribution<double> elbow(-2.5, 2.5);
  std::uniform_real_distribution<double> pitch(-1.5, 1.5);
  const ArmGeometry geom{0.9, 0.7, 0.3};
  int checked = 0;
  while (checked < 300) {
    const double phi = pitch(rng);
    const double t2 = shoulder(rng);
    const double t3 = elbow(rng);
    const Vector4d q(yaw(rng), t2, t3, phi - t2 - t3);
    const SpatialPointd target = fk_spatial<double>(geom, q)[3];
    // Keep targets in front of the base so the wrist stays the same point.
    if (fk_planar<double>(geom, q[1], q[2], q[3])[3].x() < 1e-3) continue;
    const JointAngles sol = ik(geom, target, phi);
    EXPECT_NEAR(normalize_angle(sol[1] + sol[2] + sol[3] - phi), 0.0, 1e-12);
    EXPECT_LE(sol[2], 0.0);
    ExpectPoint(fk_spatial(geom, sol)[3], target, 1e-9);
    ++checked;
  }
}

}  // namespace
}  // namespace arm4
