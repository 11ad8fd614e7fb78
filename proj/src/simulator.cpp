#include "arm4/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

namespace arm4 {

namespace {

std::size_t whole_ratio(double numerator, double denominator, const char* what) {
  const double ratio = numerator / denominator;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw InvalidArgument(what);
  }
  return static_cast<std::size_t>(rounded);
}

StateVector derivative(const ArmModel& arm, const StateVector& x, const Vector4d& torque) {
  const Vector4d theta = x.head<4>();
  const Vector4d rates = x.tail<4>();
  return make_state(rates, forward_dynamics(arm, theta, rates, torque));
}

double percentile(std::vector<double> samples, double q) {
  std::sort(samples.begin(), samples.end());
  const double pos = q * static_cast<double>(samples.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return samples[lo] + (pos - static_cast<double>(lo)) * (samples[hi] - samples[lo]);
}

// Produces the control to hold over the next period.
class Controller {
 public:
  Controller(const ArmModel& arm, const ControllerMode& mode, const Vector4d& theta_ref,
             const Vector4d& theta0)
      : arm_(arm),
        mode_(mode),
        reference_(make_state(theta_ref, Vector4d::Zero())),
        feedforward_(equilibrium_torque(arm, theta_ref)),
        cached_torque_(equilibrium_torque(arm, theta0)) {}

  Vector4d operator()(const StateVector& x) {
    if (std::holds_alternative<Passive>(mode_)) return Vector4d::Zero();
    const Vector4d theta = x.head<4>();
    GainMatrix K;
    if (const auto* online = std::get_if<OnlineLqr>(&mode_)) {
      OperatingPoint op;
      op.theta = theta;
      op.rates = x.tail<4>();
      op.torque = cached_torque_;
      const LinearModel model = linearize(arm_, op);
      K = lqr_gain(model.A, model.B, online->weights);
    } else {
      K = lookup(std::get<TableLqr>(mode_).table.get(), JointAngles(theta));
    }
    const Vector4d u = feedforward_ - K * (x - reference_);
    cached_torque_ = u;
    return u;
  }

 private:
  const ArmModel& arm_;
  const ControllerMode& mode_;
  StateVector reference_;
  Vector4d feedforward_;
  Vector4d cached_torque_;
};

}  // namespace

void SimConfig::validate() const {
  if (!(dt > 0.0) || !(control_period >= dt) || !(duration > 0.0) || !std::isfinite(dt) ||
      !std::isfinite(control_period) || !std::isfinite(duration)) {
    throw InvalidArgument("sim config requires 0 < dt <= control_period and duration > 0");
  }
  substeps();
  periods();
}

std::size_t SimConfig::substeps() const {
  return whole_ratio(control_period, dt, "control_period must be a multiple of dt");
}

std::size_t SimConfig::periods() const {
  return whole_ratio(duration, control_period, "duration must be a multiple of control_period");
}

StateVector step_rk4(const ArmModel& arm, const StateVector& x, const Vector4d& torque,
                     double dt) {
  const StateVector k1 = derivative(arm, x, torque);
  const StateVector k2 = derivative(arm, x + 0.5 * dt * k1, torque);
  const StateVector k3 = derivative(arm, x + 0.5 * dt * k2, torque);
  const StateVector k4 = derivative(arm, x + dt * k3, torque);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Trajectory simulate(const ArmModel& arm, const SimConfig& config, const ControllerMode& mode,
                    const StateVector& x0, const Vector4d& theta_ref) {
  arm.validate();
  config.validate();
  if (!x0.allFinite() || !theta_ref.allFinite()) {
    throw InvalidArgument("initial state and reference must be finite");
  }
  if (const auto* table = std::get_if<TableLqr>(&mode)) {
    if (digest_of(table->table.get()) != parameter_digest(arm, table->weights)) {
      throw DigestMismatch("gain table was built for a different arm or weights");
    }
  }

  const std::size_t substeps = config.substeps();
  const std::size_t periods = config.periods();
  Controller control(arm, mode, theta_ref, x0.head<4>());

  Trajectory out;
  out.time.reserve(periods + 1);
  out.state.reserve(periods + 1);
  out.torque.reserve(periods + 1);
  out.energy.reserve(periods + 1);

  StateVector x = x0;
  for (std::size_t k = 0;; ++k) {
    Vector4d u;
    try {
      u = control(x);
    } catch (const Error& e) {
      throw SimulationAborted(std::move(out), std::current_exception(), e.what());
    }
    out.time.push_back(static_cast<double>(k) * config.control_period);
    out.state.push_back(x);
    out.torque.push_back(u);
    out.energy.push_back(total_energy(arm, x.head<4>(), x.tail<4>()));
    if (k == periods) break;
    try {
      for (std::size_t s = 0; s < substeps; ++s) x = step_rk4(arm, x, u, config.dt);
    } catch (const Error& e) {
      throw SimulationAborted(std::move(out), std::current_exception(), e.what());
    }
  }
  return out;
}

void write_csv(std::ostream& out, const Trajectory& trajectory) {
  out << "t,th1,th2,th3,th4,w1,w2,w3,w4,tau1,tau2,tau3,tau4,E\n";
  char buf[32];
  auto field = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
  };
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    field(trajectory.time[i]);
    for (int j = 0; j < 8; ++j) {
      out << ',';
      field(trajectory.state[i][j]);
    }
    for (int j = 0; j < 4; ++j) {
      out << ',';
      field(trajectory.torque[i][j]);
    }
    out << ',';
    field(trajectory.energy[i]);
    out << '\n';
  }
}

LatencyReport bench_controller(const ArmModel& arm, const CostWeights& weights,
                               const AnyTable& table, std::size_t n_iters, unsigned seed) {
  if (n_iters == 0) throw EmptyBenchmark("benchmark needs at least one iteration");
  using Clock = std::chrono::steady_clock;

  const Box bounds = std::visit([](const auto& t) { return t.bounds(); }, table);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> rate(-0.5, 0.5);
  std::vector<StateVector> states(n_iters);
  for (auto& x : states) {
    for (int d = 0; d < 4; ++d) {
      x[d] = bounds.lo[d] + unit(rng) * (bounds.hi[d] - bounds.lo[d]);
      x[d + 4] = rate(rng);
    }
  }

  std::vector<double> online(n_iters), lookup_times(n_iters);
  double sink = 0.0;
  for (std::size_t i = 0; i < n_iters; ++i) {
    const StateVector& x = states[i];
    const auto start = Clock::now();
    OperatingPoint op;
    op.theta = x.head<4>();
    op.rates = x.tail<4>();
    op.torque = equilibrium_torque(arm, op.theta);
    const LinearModel model = linearize(arm, op);
    const GainMatrix K = lqr_gain(model.A, model.B, weights);
    const Vector4d u = -K * x;
    const auto stop = Clock::now();
    sink += u.sum();
    online[i] = std::chrono::duration<double, std::micro>(stop - start).count();
  }
  for (std::size_t i = 0; i < n_iters; ++i) {
    const StateVector& x = states[i];
    const auto start = Clock::now();
    const GainMatrix K = lookup(table, JointAngles(Vector4d(x.head<4>())));
    const Vector4d u = -K * x;
    const auto stop = Clock::now();
    sink += u.sum();
    lookup_times[i] = std::chrono::duration<double, std::micro>(stop - start).count();
  }
  // Keeps the timed work observable.
  volatile double keep = sink;
  (void)keep;

  LatencyReport report;
  report.iterations = n_iters;
  report.online_median_us = percentile(online, 0.5);
  report.online_p95_us = percentile(online, 0.95);
  report.lookup_median_us = percentile(lookup_times, 0.5);
  report.lookup_p95_us = percentile(lookup_times, 0.95);
  report.speedup = report.online_median_us / report.lookup_median_us;
  return report;
}

}  // namespace arm4
