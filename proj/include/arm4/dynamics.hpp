#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "arm4/errors.hpp"
#include "arm4/kinematics.hpp"

namespace arm4 {

/// Point masses sit at joints P2..P4; link masses are spread uniformly along
/// links 1..3. Units are kg and m/s^2.
struct MassModel {
  double m2 = 1.0;
  double m3 = 1.0;
  double m4 = 1.0;
  double M1 = 0.0;
  double M2 = 0.0;
  double M3 = 0.0;
  double g = 9.81;

  void validate() const {
    for (double v : {m2, m3, m4, M1, M2, M3, g}) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw InvalidArgument("masses and gravity must be finite and non-negative");
      }
    }
  }
};

struct ArmModel {
  ArmGeometry geometry;
  MassModel masses;

  void validate() const {
    geometry.validate();
    masses.validate();
  }
};

// Below this a joint cannot be driven and forward dynamics refuses to divide.
inline constexpr double kDegenerateInertia = 1e-12;

/// Moment of inertia of a uniform segment pA-pB of mass m about the origin.
template <typename Scalar>
Scalar segment_inertia(const PlanarPoint<Scalar>& a, const PlanarPoint<Scalar>& b,
                       double m) {
  const Scalar sum = a.x() * a.x() + a.x() * b.x() + b.x() * b.x() + a.y() * a.y() +
                     a.y() * b.y() + b.y() * b.y();
  return (m / 3.0) * sum;
}

template <typename Scalar>
Scalar point_inertia(const PlanarPoint<Scalar>& p, double m) {
  return m * (p.x() * p.x() + p.y() * p.y());
}

/// Effective inertia seen by each joint in the current configuration.
///   I1: whole arm about the vertical yaw axis (radial distances only)
///   I2: subtree distal to P1, about P1
///   I3: subtree distal to P2, about P2
///   I4: the tool link and m4, about P3
/// I4 does not depend on the configuration and is returned in closed form.
template <typename Scalar>
Vector4<Scalar> joint_inertias(const ArmModel& arm, const Vector4<Scalar>& theta) {
  const ArmGeometry& L = arm.geometry;
  const MassModel& m = arm.masses;
  const auto p = fk_planar<Scalar>(L, theta[1], theta[2], theta[3]);
  const PlanarPoint<Scalar> origin = PlanarPoint<Scalar>::Zero();

  // The yaw axis sees only radial offsets.
  auto radial_segment = [](const Scalar& xa, const Scalar& xb, double mass) {
    return Scalar((mass / 3.0) * (xa * xa + xa * xb + xb * xb));
  };
  const Scalar i1 = m.m2 * p[1].x() * p[1].x() + m.m3 * p[2].x() * p[2].x() +
                    m.m4 * p[3].x() * p[3].x() + radial_segment(p[0].x(), p[1].x(), m.M1) +
                    radial_segment(p[1].x(), p[2].x(), m.M2) +
                    radial_segment(p[2].x(), p[3].x(), m.M3);

  const Scalar i2 = segment_inertia<Scalar>(origin, p[1], m.M1) +
                    segment_inertia<Scalar>(p[1], p[2], m.M2) +
                    segment_inertia<Scalar>(p[2], p[3], m.M3) +
                    point_inertia<Scalar>(p[1], m.m2) + point_inertia<Scalar>(p[2], m.m3) +
                    point_inertia<Scalar>(p[3], m.m4);

  const PlanarPoint<Scalar> r3 = p[2] - p[1];
  const PlanarPoint<Scalar> r4 = p[3] - p[1];
  const Scalar i3 = segment_inertia<Scalar>(origin, r3, m.M2) +
                    segment_inertia<Scalar>(r3, r4, m.M3) + point_inertia<Scalar>(r3, m.m3) +
                    point_inertia<Scalar>(r4, m.m4);

  const double l3_sq = L.L3 * L.L3;
  const Scalar i4 = Scalar(m.m4 * l3_sq + m.M3 * l3_sq / 3.0);

  Vector4<Scalar> out;
  out << i1, i2, i3, i4;
  return out;
}

/// Gravitational potential with the base joint P1 as the zero reference.
/// Link masses act at the mean height of their endpoints.
template <typename Scalar>
Scalar potential_energy(const ArmModel& arm, const Vector4<Scalar>& theta) {
  const MassModel& m = arm.masses;
  const auto p = fk_planar<Scalar>(arm.geometry, theta[1], theta[2], theta[3]);
  const Scalar points = m.m2 * p[1].y() + m.m3 * p[2].y() + m.m4 * p[3].y();
  const Scalar links = m.M1 * (p[0].y() + p[1].y()) / 2.0 +
                       m.M2 * (p[1].y() + p[2].y()) / 2.0 +
                       m.M3 * (p[2].y() + p[3].y()) / 2.0;
  return m.g * (points + links);
}

/// Per-joint rotational kinetic energy, 1/2 sum I_k(theta) rate_k^2.
template <typename Scalar>
Scalar kinetic_energy(const ArmModel& arm, const Vector4<Scalar>& theta,
                      const Vector4<Scalar>& rates) {
  const Vector4<Scalar> inertia = joint_inertias<Scalar>(arm, theta);
  Scalar sum(0.0);
  for (int k = 0; k < 4; ++k) sum += inertia[k] * rates[k] * rates[k];
  return 0.5 * sum;
}

inline double total_energy(const ArmModel& arm, const Vector4d& theta,
                           const Vector4d& rates) {
  return kinetic_energy<double>(arm, theta, rates) + potential_energy<double>(arm, theta);
}

/// Configuration-dependent pieces of the equations of motion, with exact
/// (forward-mode) derivatives in theta.
struct DynamicsTerms {
  Vector4d inertia;
  // Row k holds dI_k / dtheta_j.
  Eigen::Matrix4d inertia_jacobian;
  Vector4d potential_gradient;
};

DynamicsTerms dynamics_terms(const ArmModel& arm, const Vector4d& theta);

/// Torque that holds the arm still against gravity: dPE/dtheta.
Vector4d equilibrium_torque(const ArmModel& arm, const Vector4d& theta);

/// Joint accelerations from the Euler-Lagrange equations of
/// L = 1/2 sum I_k(theta) rate_k^2 - PE(theta), with the motor torque entering
/// each joint as tau_i / I_i. The mass matrix is diagonal, so each joint is
/// solved independently.
///
/// Throws DegenerateInertia if any I_k(theta) <= kDegenerateInertia.
Vector4d forward_dynamics(const ArmModel& arm, const Vector4d& theta,
                          const Vector4d& rates, const Vector4d& torque);

// Same as above with the configuration terms already evaluated.
Vector4d forward_dynamics(const DynamicsTerms& terms, const Vector4d& rates,
                          const Vector4d& torque);

void check_inertia(const Vector4d& inertia);

}  // namespace arm4
