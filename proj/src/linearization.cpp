#include "arm4/linearization.hpp"

#include <algorithm>
#include <cmath>

namespace arm4 {

LinearModel linearize(const ArmModel& arm, const OperatingPoint& op) {
  return linearize(arm, op, kJacobianStep);
}

LinearModel linearize(const ArmModel& arm, const OperatingPoint& op, double relative_step) {
  const DynamicsTerms terms = dynamics_terms(arm, op.theta);
  check_inertia(terms.inertia);

  LinearModel model;
  model.A.setZero();
  model.B.setZero();
  model.A.topRightCorner<4, 4>().setIdentity();
  model.B.bottomRows<4>().diagonal() = terms.inertia.cwiseInverse();

  for (int j = 0; j < 8; ++j) {
    Vector4d theta_hi = op.theta, theta_lo = op.theta;
    Vector4d rates_hi = op.rates, rates_lo = op.rates;
    double& hi = j < 4 ? theta_hi[j] : rates_hi[j - 4];
    double& lo = j < 4 ? theta_lo[j] : rates_lo[j - 4];
    const double h = relative_step * std::max(1.0, std::abs(hi));
    hi += h;
    lo -= h;
    // Divide by the step actually represented after rounding.
    const double span = hi - lo;
    const Vector4d f_hi = forward_dynamics(arm, theta_hi, rates_hi, op.torque);
    const Vector4d f_lo = forward_dynamics(arm, theta_lo, rates_lo, op.torque);
    model.A.block<4, 1>(4, j) = (f_hi - f_lo) / span;
  }
  return model;
}

OperatingPoint equilibrium_point(const ArmModel& arm, const Vector4d& theta_ref) {
  if (!theta_ref.allFinite()) throw InvalidArgument("reference angles must be finite");
  const DynamicsTerms terms = dynamics_terms(arm, theta_ref);
  for (int k = 1; k < 4; ++k) {
    if (!(terms.inertia[k] > kDegenerateInertia)) {
      throw DegenerateInertia(k, terms.inertia[k]);
    }
  }
  OperatingPoint op;
  op.theta = theta_ref;
  op.rates.setZero();
  op.torque = terms.potential_gradient;
  return op;
}

StateVector state_derivative(const ArmModel& arm, const OperatingPoint& op) {
  return make_state(op.rates, forward_dynamics(arm, op.theta, op.rates, op.torque));
}

}  // namespace arm4
