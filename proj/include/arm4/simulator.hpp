#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "arm4/gain_table.hpp"
#include "arm4/linearization.hpp"

namespace arm4 {

struct SimConfig {
  double dt = 1e-3;
  // Zero-order hold between controller updates; a multiple of dt.
  double control_period = 0.02;
  double duration = 5.0;

  void validate() const;
  // Integration steps per control period.
  std::size_t substeps() const;
  std::size_t periods() const;
};

struct Passive {};

// Relinearizes and re-solves the Riccati equation every control period,
// linearizing at the previously commanded torque.
struct OnlineLqr {
  CostWeights weights;
};

struct TableLqr {
  std::reference_wrapper<const AnyTable> table;
  // Weights the table claims to be built with; part of the digest check.
  CostWeights weights;
};

using ControllerMode = std::variant<Passive, OnlineLqr, TableLqr>;

struct Trajectory {
  std::vector<double> time;
  std::vector<StateVector> state;
  std::vector<Vector4d> torque;
  std::vector<double> energy;

  std::size_t size() const { return time.size(); }
};

/// One classical RK4 step of x' = [rates, forward_dynamics(theta, rates, torque)]
/// with the torque held over the step.
StateVector step_rk4(const ArmModel& arm, const StateVector& x, const Vector4d& torque,
                     double dt);

/// Thrown when a run stops early; carries the samples recorded so far.
class SimulationAborted : public Error {
 public:
  SimulationAborted(Trajectory partial, std::exception_ptr cause, const std::string& what)
      : Error(what), partial_(std::move(partial)), cause_(std::move(cause)) {}

  const Trajectory& partial() const { return partial_; }
  [[noreturn]] void rethrow_cause() const { std::rethrow_exception(cause_); }

 private:
  Trajectory partial_;
  std::exception_ptr cause_;
};

/// Fixed-step simulation under the control law
///   u = tau_eq(theta_ref) - K (x - x_ref)
/// refreshed once per control period (Passive applies u = 0). Samples are
/// recorded at every control update, including t = 0 and the final time.
///
/// Throws DigestMismatch up front if a table was built for another arm, and
/// SimulationAborted (wrapping OutOfBounds, NotStabilizable, ...) mid-run.
Trajectory simulate(const ArmModel& arm, const SimConfig& config, const ControllerMode& mode,
                    const StateVector& x0, const Vector4d& theta_ref);

/// CSV with header t,th1..th4,w1..w4,tau1..tau4,E and 17 significant digits.
void write_csv(std::ostream& out, const Trajectory& trajectory);

struct LatencyReport {
  std::size_t iterations = 0;
  double online_median_us = 0.0;
  double online_p95_us = 0.0;
  double lookup_median_us = 0.0;
  double lookup_p95_us = 0.0;
  // online median over lookup median
  double speedup = 0.0;
};

/// Times one online control step (linearize + Riccati + gain application)
/// against one table lookup + gain application, at random in-bounds states.
/// Runs on the calling thread only. Throws EmptyBenchmark for n_iters == 0.
LatencyReport bench_controller(const ArmModel& arm, const CostWeights& weights,
                               const AnyTable& table, std::size_t n_iters,
                               unsigned seed = 12345);

}  // namespace arm4
