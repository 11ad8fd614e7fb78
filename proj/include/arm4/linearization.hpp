#pragma once

#include <Eigen/Dense>

#include "arm4/dynamics.hpp"

namespace arm4 {

using StateVector = Eigen::Matrix<double, 8, 1>;
using StateMatrix = Eigen::Matrix<double, 8, 8>;
using InputMatrix = Eigen::Matrix<double, 8, 4>;

// Point about which the dynamics are linearized.
struct OperatingPoint {
  Vector4d theta = Vector4d::Zero();
  Vector4d rates = Vector4d::Zero();
  Vector4d torque = Vector4d::Zero();
};

/// x' = A x + B u for x = [theta, rates], u = torque.
struct LinearModel {
  StateMatrix A;
  InputMatrix B;
};

inline StateVector make_state(const Vector4d& theta, const Vector4d& rates) {
  StateVector x;
  x << theta, rates;
  return x;
}

// Relative central-difference step used for the A matrix.
inline constexpr double kJacobianStep = 1e-6;

/// Linearizes the forward dynamics at `op`. The lower block of B is
/// diag(1/I_k) taken directly from the torque term; the lower blocks of A are
/// central differences with step kJacobianStep * max(1, |coordinate|).
LinearModel linearize(const ArmModel& arm, const OperatingPoint& op);

// Same, with an explicit relative step (used to cross-check accuracy).
LinearModel linearize(const ArmModel& arm, const OperatingPoint& op, double relative_step);

/// Gravity-holding operating point at rest. Only the planar joints are
/// checked for degenerate inertia here; a zero yaw inertia (arm on the yaw
/// axis) is still a valid equilibrium but cannot be linearized.
OperatingPoint equilibrium_point(const ArmModel& arm, const Vector4d& theta_ref);

// [rates, accelerations] at the operating point.
StateVector state_derivative(const ArmModel& arm, const OperatingPoint& op);

}  // namespace arm4
