#include "arm4/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <json.hpp>

namespace arm4 {

namespace {

using nlohmann::json;

void expect_object(const json& j, std::string_view where,
                   std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (auto key : allowed) known = known || item.key() == key;
    if (!known) throw ConfigError("unknown key '" + item.key() + "' in " + std::string(where));
  }
}

double number(const json& j, std::string_view where) {
  if (!j.is_number()) throw ConfigError(std::string(where) + " must be a number");
  return j.get<double>();
}

void read_number(const json& obj, const char* key, std::string_view where, double& out) {
  if (auto it = obj.find(key); it != obj.end()) {
    out = number(*it, std::string(where) + "." + key);
  }
}

template <int N>
void read_vector(const json& obj, const char* key, std::string_view where,
                 Eigen::Matrix<double, N, 1>& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  const std::string name = std::string(where) + "." + key;
  if (!it->is_array() || it->size() != static_cast<std::size_t>(N)) {
    throw ConfigError(name + " must be an array of " + std::to_string(N) + " numbers");
  }
  for (int i = 0; i < N; ++i) out[i] = number((*it)[i], name);
}

void read_grid(const json& j, GridSpec& grid) {
  if (!j.is_array() || j.size() != 4) throw ConfigError("grid must be an array of 4 axes");
  for (int d = 0; d < 4; ++d) {
    const std::string where = "grid[" + std::to_string(d) + "]";
    const json& axis = j[d];
    expect_object(axis, where, {"min", "max", "count"});
    read_number(axis, "min", where, grid.axes[d].min);
    read_number(axis, "max", where, grid.axes[d].max);
    if (auto it = axis.find("count"); it != axis.end()) {
      if (!it->is_number_unsigned()) throw ConfigError(where + ".count must be a positive integer");
      grid.axes[d].count = it->get<std::uint32_t>();
    }
  }
}

}  // namespace

ArmModel ArmConfig::default_arm() {
  ArmModel arm;
  arm.geometry = {1.0, 0.8, 0.5};
  arm.masses = {0.15, 0.1, 0.1, 0.12, 0.1, 0.08, 9.81};
  return arm;
}

Eigen::Matrix<double, 8, 1> ArmConfig::default_q() {
  Eigen::Matrix<double, 8, 1> q;
  q << 100, 100, 100, 100, 1, 1, 1, 1;
  return q;
}

GridSpec ArmConfig::default_grid() {
  GridSpec grid;
  grid.axes = {GridAxis{-0.3, 0.3, 3}, GridAxis{0.4, 1.0, 3}, GridAxis{0.5, 1.1, 3},
               GridAxis{-0.5, 0.1, 3}};
  return grid;
}

Vector4d ArmConfig::default_reference() { return Vector4d(0.0, 0.7, 0.8, -0.2); }

void ArmConfig::validate() const {
  try {
    arm.validate();
    if (!q_diagonal.allFinite() || (q_diagonal.array() < 0.0).any()) {
      throw InvalidArgument("Q diagonal must be non-negative");
    }
    if (!r_diagonal.allFinite() || (r_diagonal.array() <= 0.0).any()) {
      throw InvalidArgument("R diagonal must be positive");
    }
    grid.validate();
    sim.validate();
    if (!theta_ref.allFinite() || !theta0.allFinite() || !rates0.allFinite()) {
      throw InvalidArgument("sim states must be finite");
    }
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

ArmConfig parse_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  expect_object(root, "config", {"geometry", "masses", "weights", "grid", "sim"});

  ArmConfig cfg;
  if (auto it = root.find("geometry"); it != root.end()) {
    expect_object(*it, "geometry", {"L1", "L2", "L3"});
    ArmGeometry& g = cfg.arm.geometry;
    read_number(*it, "L1", "geometry", g.L1);
    read_number(*it, "L2", "geometry", g.L2);
    read_number(*it, "L3", "geometry", g.L3);
  }
  if (auto it = root.find("masses"); it != root.end()) {
    expect_object(*it, "masses", {"m2", "m3", "m4", "M1", "M2", "M3", "g"});
    MassModel& m = cfg.arm.masses;
    read_number(*it, "m2", "masses", m.m2);
    read_number(*it, "m3", "masses", m.m3);
    read_number(*it, "m4", "masses", m.m4);
    read_number(*it, "M1", "masses", m.M1);
    read_number(*it, "M2", "masses", m.M2);
    read_number(*it, "M3", "masses", m.M3);
    read_number(*it, "g", "masses", m.g);
  }
  if (auto it = root.find("weights"); it != root.end()) {
    expect_object(*it, "weights", {"Q", "R"});
    read_vector<8>(*it, "Q", "weights", cfg.q_diagonal);
    read_vector<4>(*it, "R", "weights", cfg.r_diagonal);
  }
  if (auto it = root.find("grid"); it != root.end()) read_grid(*it, cfg.grid);
  if (auto it = root.find("sim"); it != root.end()) {
    expect_object(*it, "sim",
                  {"dt", "control_period", "duration", "theta_ref", "theta0", "rates0"});
    read_number(*it, "dt", "sim", cfg.sim.dt);
    read_number(*it, "control_period", "sim", cfg.sim.control_period);
    read_number(*it, "duration", "sim", cfg.sim.duration);
    read_vector<4>(*it, "theta_ref", "sim", cfg.theta_ref);
    // The start defaults to a 0.1 rad offset from whatever the reference is.
    cfg.theta0 = cfg.theta_ref + Vector4d::Constant(0.1);
    read_vector<4>(*it, "theta0", "sim", cfg.theta0);
    read_vector<4>(*it, "rates0", "sim", cfg.rates0);
  }
  cfg.validate();
  return cfg;
}

ArmConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

}  // namespace arm4
