#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "arm4/config.hpp"
#include "test_support.hpp"

namespace arm4 {
namespace {

using testing::max_abs_angle_error;
using testing::regulation_box;
using testing::trajectory_gap;
using testing::unit_arm;

constexpr double kPi = std::numbers::pi;

StateVector run_passive(const ArmModel& arm, StateVector x, double dt, int steps) {
  for (int i = 0; i < steps; ++i) x = step_rk4(arm, x, Vector4d::Zero(), dt);
  return x;
}

// Earliest sample time after which every sample stays within `tol` of the reference.
double settling_time(const Trajectory& t, const Vector4d& ref, double tol) {
  double settled = std::numeric_limits<double>::infinity();
  for (std::size_t i = t.size(); i-- > 0;) {
    if ((t.state[i].head<4>() - ref).cwiseAbs().maxCoeff() >= tol) break;
    settled = t.time[i];
  }
  return settled;
}

TEST(StepRk4, FixedPointWithoutGravity) {
  ArmModel arm = unit_arm();
  arm.masses.g = 0.0;
  const StateVector x = make_state(Vector4d(0.3, 0.8, -0.4, 0.2), Vector4d::Zero());
  EXPECT_EQ(step_rk4(arm, x, Vector4d::Zero(), 1e-3), x);
}

TEST(StepRk4, FourthOrderSelfConvergence) {
  const ArmModel arm = unit_arm();
  const StateVector x0 = make_state(Vector4d(0.2, 0.9, -0.5, 0.4), Vector4d(0.3, -0.2, 0.5, 0.1));
  const double base = 0.02;
  const StateVector ref = run_passive(arm, x0, base / 32, 32 * 50);
  double errors[3];
  for (int k = 0; k < 3; ++k) {
    const int factor = 1 << k;
    errors[k] = (run_passive(arm, x0, base / factor, 50 * factor) - ref).cwiseAbs().maxCoeff();
  }
  for (int k = 0; k < 2; ++k) {
    const double order = std::log2(errors[k] / errors[k + 1]);
    EXPECT_GE(order, 3.8) << "errors " << errors[k] << " -> " << errors[k + 1];
  }
}

TEST(StepRk4, SmallOscillationPendulumPeriod) {
  ArmModel arm;
  arm.geometry = {1.0, 0.8, 0.5};
  arm.masses = {1.0, 1e-6, 1e-6, 0.0, 1e-6, 1e-6, 9.81};
  // Hanging shoulder pendulum. The tiny distal links stick out sideways so the
  // yaw inertia never vanishes; constant torques hold them roughly in place.
  const Vector4d hang(0.0, kPi, kPi / 2, 0.0);
  Vector4d hold = equilibrium_torque(arm, hang);
  hold[0] = hold[1] = 0.0;
  StateVector x = make_state(hang + Vector4d(0, 0.05, 0, 0), Vector4d::Zero());

  const double dt = 1e-3;
  std::vector<double> crossings;
  double prev = x[1] - kPi;
  for (int i = 1; i <= 12000; ++i) {
    x = step_rk4(arm, x, hold, dt);
    const double cur = x[1] - kPi;
    if (prev < 0.0 && cur >= 0.0) crossings.push_back((i - 1) * dt + dt * (-prev) / (cur - prev));
    prev = cur;
  }
  ASSERT_GE(crossings.size(), 3u);
  const double measured = (crossings.back() - crossings.front()) / (crossings.size() - 1);
  const double I = arm.masses.m2 * arm.geometry.L1 * arm.geometry.L1;
  const double mgh = arm.masses.g * arm.masses.m2 * arm.geometry.L1;
  const double expected = 2.0 * kPi * std::sqrt(I / mgh);
  EXPECT_NEAR(measured / expected, 1.0, 1e-2);
}

TEST(SimConfigTest, Validation) {
  SimConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.substeps(), 20u);
  EXPECT_EQ(c.periods(), 250u);
  c.control_period = 0.0005;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = SimConfig{};
  c.control_period = 0.0205;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = SimConfig{};
  c.duration = 0.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Simulate, PassiveEnergyConservation) {
  ArmConfig cfg;
  SimConfig sim = cfg.sim;
  sim.duration = 10.0;
  const Trajectory t = simulate(cfg.arm, sim, Passive{}, cfg.initial_state(), cfg.theta_ref);
  ASSERT_EQ(t.size(), 501u);
  const double e0 = t.energy.front();
  double drift = 0.0;
  for (double e : t.energy) drift = std::max(drift, std::abs(e - e0));
  EXPECT_LE(drift, 1e-5 * std::max(1.0, std::abs(e0)));
  for (const auto& u : t.torque) EXPECT_EQ(u, Vector4d::Zero());
}

TEST(Simulate, SetpointIsInvariant) {
  ArmConfig cfg;
  const StateVector x0 = make_state(cfg.theta_ref, Vector4d::Zero());
  const Vector4d tau_eq = equilibrium_torque(cfg.arm, cfg.theta_ref);
  const Trajectory t = simulate(cfg.arm, cfg.sim, OnlineLqr{cfg.weights()}, x0, cfg.theta_ref);
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_LE((t.state[i] - x0).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE((t.torque[i] - tau_eq).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Simulate, SampleLayout) {
  ArmConfig cfg;
  SimConfig sim = cfg.sim;
  sim.duration = 0.1;
  const Trajectory t = simulate(cfg.arm, sim, Passive{}, cfg.initial_state(), cfg.theta_ref);
  ASSERT_EQ(t.size(), 6u);
  EXPECT_EQ(t.state.size(), t.size());
  EXPECT_EQ(t.torque.size(), t.size());
  EXPECT_EQ(t.energy.size(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(t.time[i], 0.02 * i, 1e-15);
  EXPECT_EQ(t.state.front(), cfg.initial_state());
}

TEST(Simulate, OnlineAndTableRegulate) {
  ArmConfig cfg;
  const CostWeights W = cfg.weights();
  const Trajectory online = simulate(cfg.arm, cfg.sim, OnlineLqr{W}, cfg.initial_state(),
                                     cfg.theta_ref);
  const AnyTable table = refine(cfg.arm, W, regulation_box(cfg.theta_ref), 1e-2, 5);
  const Trajectory tabled = simulate(cfg.arm, cfg.sim, TableLqr{std::cref(table), W},
                                     cfg.initial_state(), cfg.theta_ref);
  EXPECT_LE(settling_time(online, cfg.theta_ref, 1e-2), 5.0);
  EXPECT_LE(settling_time(tabled, cfg.theta_ref, 1e-2), 5.0);
  EXPECT_LT(max_abs_angle_error(online, cfg.theta_ref, 5.0), 1e-2);
  EXPECT_LT(trajectory_gap(online, tabled), 5e-2);
}

TEST(Simulate, DenseTableRegulates) {
  ArmConfig cfg;
  const CostWeights W = cfg.weights();
  const AnyTable table = precompute(cfg.arm, W, cfg.grid);
  const Trajectory t = simulate(cfg.arm, cfg.sim, TableLqr{std::cref(table), W},
                                cfg.initial_state(), cfg.theta_ref);
  EXPECT_LE(settling_time(t, cfg.theta_ref, 1e-2), 5.0);
}

TEST(Simulate, TableGapShrinksWithTolerance) {
  ArmConfig cfg;
  const CostWeights W = cfg.weights();
  const Trajectory online = simulate(cfg.arm, cfg.sim, OnlineLqr{W}, cfg.initial_state(),
                                     cfg.theta_ref);
  double previous = std::numeric_limits<double>::infinity();
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    const AnyTable table = refine(cfg.arm, W, regulation_box(cfg.theta_ref), eps, 5);
    const double gap = trajectory_gap(
        online, simulate(cfg.arm, cfg.sim, TableLqr{std::cref(table), W}, cfg.initial_state(),
                         cfg.theta_ref));
    RecordProperty("gap_" + std::to_string(eps), std::to_string(gap));
    EXPECT_LE(gap, previous) << "eps " << eps;
    previous = gap;
  }
}

TEST(Simulate, TableDigestMismatch) {
  ArmConfig cfg;
  const AnyTable table = precompute(cfg.arm, cfg.weights(), cfg.grid);
  ArmModel other = cfg.arm;
  other.masses.m3 *= 1.5;
  EXPECT_THROW(simulate(other, cfg.sim, TableLqr{std::cref(table), cfg.weights()},
                        cfg.initial_state(), cfg.theta_ref),
               DigestMismatch);
  Eigen::Vector4d r = cfg.r_diagonal * 2.0;
  EXPECT_THROW(simulate(cfg.arm, cfg.sim,
                        TableLqr{std::cref(table), CostWeights::diagonal(cfg.q_diagonal, r)},
                        cfg.initial_state(), cfg.theta_ref),
               DigestMismatch);
}

TEST(Simulate, LeavingTheTableAborts) {
  ArmConfig cfg;
  GridSpec spec;
  for (int d = 0; d < 4; ++d) spec.axes[d] = {cfg.theta0[d] - 0.02, cfg.theta0[d] + 0.02, 2};
  const AnyTable table = precompute(cfg.arm, cfg.weights(), spec);
  try {
    simulate(cfg.arm, cfg.sim, TableLqr{std::cref(table), cfg.weights()}, cfg.initial_state(),
             cfg.theta_ref);
    FAIL() << "expected SimulationAborted";
  } catch (const SimulationAborted& e) {
    EXPECT_GE(e.partial().size(), 1u);
    EXPECT_LT(e.partial().size(), cfg.sim.periods() + 1);
    EXPECT_THROW(e.rethrow_cause(), OutOfBounds);
  }
}

TEST(Simulate, CsvFormat) {
  ArmConfig cfg;
  SimConfig sim = cfg.sim;
  sim.duration = 0.04;
  const Trajectory t = simulate(cfg.arm, sim, Passive{}, cfg.initial_state(), cfg.theta_ref);
  std::ostringstream out;
  write_csv(out, t);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,th1,th2,th3,th4,w1,w2,w3,w4,tau1,tau2,tau3,tau4,E");
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string field;
    std::vector<double> values;
    while (std::getline(fields, field, ',')) values.push_back(std::stod(field));
    ASSERT_EQ(values.size(), 14u);
    EXPECT_EQ(values[1], t.state[rows][0]);
    EXPECT_EQ(values[13], t.energy[rows]);
    ++rows;
  }
  EXPECT_EQ(rows, 3);
}

TEST(Bench, LookupBeatsOnlineSolve) {
  ArmConfig cfg;
  const AnyTable table = precompute(cfg.arm, cfg.weights(), cfg.grid);
  const LatencyReport r = bench_controller(cfg.arm, cfg.weights(), table, 200);
  EXPECT_EQ(r.iterations, 200u);
  EXPECT_LT(r.lookup_median_us, r.online_median_us);
  EXPECT_LE(r.online_median_us, r.online_p95_us);
  EXPECT_LE(r.lookup_median_us, r.lookup_p95_us);
  EXPECT_TRUE(std::isfinite(r.speedup));
  EXPECT_GT(r.speedup, 0.0);
}

TEST(Bench, EmptyBenchmark) {
  ArmConfig cfg;
  const AnyTable table = precompute(cfg.arm, cfg.weights(), cfg.grid);
  EXPECT_THROW(bench_controller(cfg.arm, cfg.weights(), table, 0), EmptyBenchmark);
}

}  // namespace
}  // namespace arm4
