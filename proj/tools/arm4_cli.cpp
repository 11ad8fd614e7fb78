// arm4: kinematics queries, gain-table precomputation, simulation and
// controller benchmarking for the four-axis arm.
//
// Exit codes:
//   0 success
//   1 unexpected internal error
//   2 usage, config or table-format error
//   3 target unreachable (ik)
//   4 LQR synthesis failed at some node (precompute)
//   5 table digest does not match the configured arm
//   6 simulation aborted mid-run (partial CSV kept)

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "arm4/config.hpp"

namespace fs = std::filesystem;
using namespace arm4;

namespace {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kUnreachable = 3,
  kNodeFailure = 4,
  kDigestMismatch = 5,
  kAborted = 6,
};

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Short form for human-facing coordinates; rounding noise prints as 0.
std::string fmt_short(double v) {
  if (std::abs(v) < 5e-13) v = 0.0;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open table " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed to write " + path.string());
}

AnyTable load_table_for(const fs::path& path, const ArmConfig& cfg) {
  const auto bytes = read_file(path);
  const ParameterDigest digest = cfg.digest();
  return load(bytes, &digest);
}

int run_fk(const ArmConfig& cfg, const std::vector<double>& angles) {
  const JointAngles theta(angles[0], angles[1], angles[2], angles[3]);
  const auto points = fk_spatial(cfg.arm.geometry, theta);
  for (std::size_t k = 0; k < points.size(); ++k) {
    std::cout << "P" << k + 1 << " = (" << fmt_short(points[k].x()) << ", "
              << fmt_short(points[k].y()) << ", " << fmt_short(points[k].z()) << ")\n";
  }
  return kOk;
}

int run_ik(const ArmConfig& cfg, const std::vector<double>& target, double pitch) {
  try {
    const JointAngles theta =
        ik(cfg.arm.geometry, SpatialPointd(target[0], target[1], target[2]), pitch);
    std::cout << "theta = (" << fmt17(theta[0]) << ", " << fmt17(theta[1]) << ", "
              << fmt17(theta[2]) << ", " << fmt17(theta[3]) << ")\n";
    return kOk;
  } catch (const Unreachable& e) {
    std::cerr << "unreachable: " << e.what() << '\n';
    return kUnreachable;
  } catch (const SingularYaw& e) {
    std::cerr << "unreachable: " << e.what() << '\n';
    return kUnreachable;
  }
}

int run_precompute(const ArmConfig& cfg, const fs::path& out, double refine_tolerance,
                   int max_depth, unsigned workers) {
  const ParallelOptions options{workers};
  try {
    if (refine_tolerance > 0.0) {
      const RefinedTable table = refine(cfg.arm, cfg.weights(), cfg.grid.bounds(),
                                        refine_tolerance, max_depth, options);
      double worst = 0.0;
      for (const auto& cell : table.cells()) {
        if (cell.leaf && !cell.flagged) worst = std::max(worst, cell.center_error);
      }
      write_file(out, save(table));
      std::cout << "cells: " << table.cells().size() << '\n'
                << "leaves: " << table.leaf_count() << '\n'
                << "flagged: " << table.flagged_count() << '\n'
                << "depth: " << table.depth() << '\n'
                << "solves: " << table.solves() << '\n'
                << "max_leaf_error: " << fmt17(worst) << '\n'
                << "failures: 0\n";
    } else {
      const GainTable table = precompute(cfg.arm, cfg.weights(), cfg.grid, options);
      write_file(out, save(table));
      std::cout << "nodes: " << table.entries().size() << '\n' << "failures: 0\n";
    }
    return kOk;
  } catch (const NodeFailure& e) {
    std::error_code ignored;
    fs::remove(out, ignored);
    std::cout << "failures: 1\n";
    std::cerr << "precompute failed: " << e.what() << '\n';
    return kNodeFailure;
  }
}

int run_simulate(const ArmConfig& cfg, const std::string& mode_name, const fs::path& table_path,
                 const fs::path& out) {
  std::optional<AnyTable> table;
  ControllerMode mode;
  if (mode_name == "passive") {
    mode = Passive{};
  } else if (mode_name == "online") {
    mode = OnlineLqr{cfg.weights()};
  } else {
    if (table_path.empty()) {
      std::cerr << "--table is required for mode 'table'\n";
      return kUsage;
    }
    table.emplace(load_table_for(table_path, cfg));
    mode = TableLqr{std::cref(*table), cfg.weights()};
  }

  std::ofstream csv(out, std::ios::trunc);
  if (!csv) throw Error("cannot open " + out.string());
  try {
    write_csv(csv, simulate(cfg.arm, cfg.sim, mode, cfg.initial_state(), cfg.theta_ref));
  } catch (const SimulationAborted& e) {
    write_csv(csv, e.partial());
    csv << "# aborted: " << e.what() << '\n';
    std::cerr << "simulation aborted: " << e.what() << '\n';
    return kAborted;
  }
  return kOk;
}

int run_bench(const ArmConfig& cfg, const fs::path& table_path, std::size_t iters) {
  const AnyTable table = load_table_for(table_path, cfg);
  const LatencyReport r = bench_controller(cfg.arm, cfg.weights(), table, iters);
  std::cout << "iterations: " << r.iterations << '\n'
            << "online_median_us: " << fmt17(r.online_median_us) << '\n'
            << "online_p95_us: " << fmt17(r.online_p95_us) << '\n'
            << "lookup_median_us: " << fmt17(r.lookup_median_us) << '\n'
            << "lookup_p95_us: " << fmt17(r.lookup_p95_us) << '\n'
            << "speedup: " << fmt17(r.speedup) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Four-axis arm kinematics, LQR gain tables and simulation"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("-c,--config", config_path, "JSON arm configuration")->required();

  std::vector<double> angles;
  auto* fk = app.add_subcommand("fk", "Joint positions for the given angles (radians)");
  fk->add_option("angles", angles, "theta1 theta2 theta3 theta4")->required()->expected(4);

  std::vector<double> target;
  double pitch = 0.0;
  auto* ikc = app.add_subcommand("ik", "Joint angles reaching a target point");
  ikc->add_option("target", target, "x y z")->required()->expected(3);
  ikc->add_option("--pitch", pitch, "Tool pitch from vertical, radians");

  std::string out_path;
  double refine_tolerance = 0.0;
  int max_depth = 4;
  unsigned workers = 0;
  auto* pre = app.add_subcommand("precompute", "Precompute an LQR gain table");
  pre->add_option("--out", out_path, "Output table file")->required();
  pre->add_option("--refine", refine_tolerance, "Build a refined tree with this tolerance")
      ->check(CLI::PositiveNumber);
  pre->add_option("--max-depth", max_depth, "Refinement depth limit")->check(CLI::PositiveNumber);
  pre->add_option("--workers", workers, "Worker threads (0 = all cores)");

  std::string mode_name;
  std::string table_path;
  auto* sim = app.add_subcommand("simulate", "Simulate the arm and write a CSV trajectory");
  sim->add_option("--mode", mode_name, "passive | online | table")
      ->required()
      ->check(CLI::IsMember({"passive", "online", "table"}));
  sim->add_option("--table", table_path, "Gain table file (mode table)");
  sim->add_option("--out", out_path, "Output CSV")->required();

  std::size_t iters = 1000;
  auto* bench = app.add_subcommand("bench", "Compare online LQR and table lookup latency");
  bench->add_option("--table", table_path, "Gain table file")->required();
  bench->add_option("--iters", iters, "Iterations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    const ArmConfig cfg = load_config(config_path);
    if (fk->parsed()) return run_fk(cfg, angles);
    if (ikc->parsed()) return run_ik(cfg, target, pitch);
    if (pre->parsed()) return run_precompute(cfg, out_path, refine_tolerance, max_depth, workers);
    if (sim->parsed()) return run_simulate(cfg, mode_name, table_path, out_path);
    if (bench->parsed()) return run_bench(cfg, table_path, iters);
  } catch (const DigestMismatch& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDigestMismatch;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const EmptyBenchmark& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const BadMagic& e) {
    std::cerr << "table error: " << e.what() << '\n';
    return kUsage;
  } catch (const VersionMismatch& e) {
    std::cerr << "table error: " << e.what() << '\n';
    return kUsage;
  } catch (const TruncatedData& e) {
    std::cerr << "table error: " << e.what() << '\n';
    return kUsage;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInternal;
  }
  return kUsage;
}
