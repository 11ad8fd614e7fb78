#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "arm4/dynamics.hpp"
#include "arm4/kinematics.hpp"
#include "arm4/riccati.hpp"

namespace arm4 {

// 4x8 state-feedback gain, stored row-major to match the table file layout.
using GainMatrix = Eigen::Matrix<double, 4, 8, Eigen::RowMajor>;
using ParameterDigest = std::array<std::uint8_t, 32>;

inline constexpr std::uint32_t kTableFormatVersion = 1;

/// SHA-256 over the arm geometry, mass model and cost weights, each double in
/// little-endian IEEE-754 order. Tables carry it so a table built for one arm
/// is never applied to another.
ParameterDigest parameter_digest(const ArmModel& arm, const CostWeights& weights);

/// LQR gain at the gravity-holding equilibrium theta (rates zero).
GainMatrix gain_at(const ArmModel& arm, const CostWeights& weights, const Vector4d& theta);

double spectral_norm(const GainMatrix& M);

struct Box;

struct GridAxis {
  double min = 0.0;
  double max = 1.0;
  std::uint32_t count = 2;

  // Node i; the last node is exactly `max`.
  double node(std::uint32_t i) const {
    if (i + 1 == count) return max;
    return min + static_cast<double>(i) * ((max - min) / static_cast<double>(count - 1));
  }
};

// Grid over the four joint angles; rates are pinned to zero at every node.
struct GridSpec {
  std::array<GridAxis, 4> axes;

  void validate() const;
  std::size_t node_count() const;
  // Row-major, last dimension fastest.
  std::size_t flat_index(const std::array<std::uint32_t, 4>& index) const;
  std::array<std::uint32_t, 4> unflatten(std::size_t flat) const;
  Vector4d node(std::size_t flat) const;
  Box bounds() const;
};

/// Axis-aligned box in angle space.
struct Box {
  Vector4d lo;
  Vector4d hi;

  Vector4d center() const { return 0.5 * (lo + hi); }
  // Corner / child c: bit (3 - d) of c selects the upper half on axis d.
  Vector4d corner(int c) const;
  Box child(int c) const;
  bool contains(const Vector4d& theta) const;
};

/// Entrywise multilinear blend of 16 corner gains (corner ordering as in
/// Box::corner) at per-axis fractions in [0, 1]. Corners with zero weight are
/// skipped, so evaluation at a corner returns that corner bit-for-bit.
GainMatrix interpolate_corners(const std::array<const GainMatrix*, 16>& corners,
                               const Vector4d& fraction);

class GainTable {
 public:
  GainTable(GridSpec spec, std::vector<GainMatrix> entries, ParameterDigest digest);

  const GridSpec& spec() const { return spec_; }
  const std::vector<GainMatrix>& entries() const { return entries_; }
  const ParameterDigest& digest() const { return digest_; }

  /// Multilinear interpolation over the 16 surrounding nodes. Cells are
  /// half-open [lo, hi) except the last one on each axis. Throws OutOfBounds
  /// outside the grid.
  GainMatrix lookup(const JointAngles& angles) const;
  Box bounds() const;

 private:
  GridSpec spec_;
  std::vector<GainMatrix> entries_;
  ParameterDigest digest_;
};

struct ParallelOptions {
  // 0 selects std::thread::hardware_concurrency().
  unsigned workers = 0;
};

/// Solves one LQR problem per grid node. Output is independent of the
/// worker count. Throws NodeFailure for the lowest-index failing node.
GainTable precompute(const ArmModel& arm, const CostWeights& weights, const GridSpec& spec,
                     const ParallelOptions& options = {});

/// Error-driven 16-ary subdivision of a box in angle space. A cell stays a
/// leaf once the spectral-norm gap between its center gain and the blend of
/// its corner gains is within tolerance; cells still above tolerance at
/// max_depth are kept as flagged leaves.
class RefinedTable {
 public:
  struct Cell {
    Box box;
    int depth = 1;
    bool leaf = true;
    bool flagged = false;
    // Spectral-norm center error; NaN when never measured (infinite tolerance).
    double center_error = 0.0;
    // Index of the first of 16 consecutive children (internal cells).
    std::uint32_t first_child = 0;
    // Corner gains (leaves).
    std::array<GainMatrix, 16> corners;
  };

  RefinedTable(std::vector<Cell> cells, double tolerance, int max_depth,
               ParameterDigest digest, std::size_t solves = 0);

  GainMatrix lookup(const JointAngles& angles) const;

  const std::vector<Cell>& cells() const { return cells_; }
  const Box& bounds() const { return cells_.front().box; }
  double tolerance() const { return tolerance_; }
  int max_depth() const { return max_depth_; }
  const ParameterDigest& digest() const { return digest_; }
  // LQR solves spent building the tree (not persisted).
  std::size_t solves() const { return solves_; }

  std::size_t leaf_count() const;
  std::size_t flagged_count() const;
  int depth() const;
  const Cell& leaf_containing(const Vector4d& theta) const;

 private:
  std::vector<Cell> cells_;
  double tolerance_;
  int max_depth_;
  ParameterDigest digest_;
  std::size_t solves_;
};

RefinedTable refine(const ArmModel& arm, const CostWeights& weights, const Box& root,
                    double tolerance, int max_depth, const ParallelOptions& options = {});

// Binary persistence. Dense tables use magic "AGT1", refined trees "AGR1".
std::vector<std::uint8_t> save(const GainTable& table);
std::vector<std::uint8_t> save(const RefinedTable& table);

using AnyTable = std::variant<GainTable, RefinedTable>;

/// Parses either table kind. When `expected` is given the stored digest must
/// match it (DigestMismatch otherwise). Also throws BadMagic, VersionMismatch
/// and TruncatedData.
AnyTable load(std::span<const std::uint8_t> bytes, const ParameterDigest* expected = nullptr);
GainTable load_grid(std::span<const std::uint8_t> bytes,
                    const ParameterDigest* expected = nullptr);
RefinedTable load_refined(std::span<const std::uint8_t> bytes,
                          const ParameterDigest* expected = nullptr);

GainMatrix lookup(const AnyTable& table, const JointAngles& angles);
const ParameterDigest& digest_of(const AnyTable& table);

}  // namespace arm4
