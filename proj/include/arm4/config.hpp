#pragma once

#include <filesystem>
#include <string_view>

#include "arm4/gain_table.hpp"
#include "arm4/simulator.hpp"

namespace arm4 {

/// Everything the command-line tool needs, parsed from one JSON document.
/// Sections and keys may be omitted (defaults below); unknown keys are
/// rejected and every module invariant is revalidated.
///
///   {
///     "geometry": {"L1": 1.0, "L2": 0.8, "L3": 0.5},
///     "masses":   {"m2": 0.15, "m3": 0.1, "m4": 0.1, "M1": 0.12, "M2": 0.1, "M3": 0.08,
///                  "g": 9.81},
///     "weights":  {"Q": [8 diagonal entries], "R": [4 diagonal entries]},
///     "grid":     [{"min": .., "max": .., "count": ..} x 4],
///     "sim":      {"dt": 1e-3, "control_period": 0.02, "duration": 5,
///                  "theta_ref": [4], "theta0": [4], "rates0": [4]}
///   }
struct ArmConfig {
  ArmModel arm = default_arm();
  Eigen::Matrix<double, 8, 1> q_diagonal = default_q();
  Eigen::Vector4d r_diagonal = Eigen::Vector4d::Ones();
  GridSpec grid = default_grid();
  SimConfig sim;
  Vector4d theta_ref = default_reference();
  Vector4d theta0 = default_reference() + Vector4d::Constant(0.1);
  Vector4d rates0 = Vector4d::Zero();

  CostWeights weights() const { return CostWeights::diagonal(q_diagonal, r_diagonal); }
  StateVector initial_state() const { return make_state(theta0, rates0); }
  ParameterDigest digest() const { return parameter_digest(arm, weights()); }
  void validate() const;

  static ArmModel default_arm();
  static Eigen::Matrix<double, 8, 1> default_q();
  static GridSpec default_grid();
  static Vector4d default_reference();
};

// Throws ConfigError on malformed JSON, unknown keys, or invalid values.
ArmConfig parse_config(std::string_view json_text);
ArmConfig load_config(const std::filesystem::path& path);

}  // namespace arm4
