#include "arm4/dynamics.hpp"

#include <unsupported/Eigen/AutoDiff>

namespace arm4 {

namespace {

using Dual = Eigen::AutoDiffScalar<Eigen::Vector4d>;

Vector4<Dual> seed(const Vector4d& theta) {
  Vector4<Dual> out;
  for (int i = 0; i < 4; ++i) out[i] = Dual(theta[i], 4, i);
  return out;
}

}  // namespace

DynamicsTerms dynamics_terms(const ArmModel& arm, const Vector4d& theta) {
  const Vector4<Dual> x = seed(theta);
  const Vector4<Dual> inertia = joint_inertias<Dual>(arm, x);
  const Dual potential = potential_energy<Dual>(arm, x);

  DynamicsTerms terms;
  for (int k = 0; k < 4; ++k) {
    terms.inertia[k] = inertia[k].value();
    // The closed-form I4 carries an empty derivative vector.
    if (inertia[k].derivatives().size() == 4) {
      terms.inertia_jacobian.row(k) = inertia[k].derivatives().transpose();
    } else {
      terms.inertia_jacobian.row(k).setZero();
    }
  }
  terms.potential_gradient = potential.derivatives();
  return terms;
}

Vector4d equilibrium_torque(const ArmModel& arm, const Vector4d& theta) {
  return dynamics_terms(arm, theta).potential_gradient;
}

void check_inertia(const Vector4d& inertia) {
  for (int k = 0; k < 4; ++k) {
    if (!(inertia[k] > kDegenerateInertia)) throw DegenerateInertia(k, inertia[k]);
  }
}

Vector4d forward_dynamics(const DynamicsTerms& terms, const Vector4d& rates,
                          const Vector4d& torque) {
  check_inertia(terms.inertia);
  const Vector4d rates_sq = rates.cwiseProduct(rates);
  Vector4d accel;
  for (int i = 0; i < 4; ++i) {
    // dL/dtheta_i
    const double generalized =
        0.5 * terms.inertia_jacobian.col(i).dot(rates_sq) - terms.potential_gradient[i];
    // d/dt (I_i rate_i) minus I_i * accel_i
    const double transport = terms.inertia_jacobian.row(i).dot(rates) * rates[i];
    accel[i] = (generalized - transport + torque[i]) / terms.inertia[i];
  }
  return accel;
}

Vector4d forward_dynamics(const ArmModel& arm, const Vector4d& theta,
                          const Vector4d& rates, const Vector4d& torque) {
  return forward_dynamics(dynamics_terms(arm, theta), rates, torque);
}

}  // namespace arm4
