#include "arm4/gain_table.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include "arm4/linearization.hpp"
#include "parallel.hpp"

namespace arm4 {

namespace {

struct AxisPosition {
  std::uint32_t index;
  double fraction;
};

AxisPosition locate(const GridAxis& axis, double value, int dim) {
  if (!(value >= axis.min && value <= axis.max)) {
    throw OutOfBounds("angle " + std::to_string(dim + 1) + " = " + std::to_string(value) +
                      " outside [" + std::to_string(axis.min) + ", " +
                      std::to_string(axis.max) + "]");
  }
  const std::uint32_t last_cell = axis.count - 2;
  const double step = (axis.max - axis.min) / static_cast<double>(axis.count - 1);
  const double guess = std::floor((value - axis.min) / step);
  auto i = static_cast<std::uint32_t>(std::clamp(guess, 0.0, static_cast<double>(last_cell)));
  // Correct for rounding in the guess; a shared node belongs to the upper cell.
  while (i < last_cell && value >= axis.node(i + 1)) ++i;
  while (i > 0 && value < axis.node(i)) --i;
  const double lo = axis.node(i);
  const double hi = axis.node(i + 1);
  return {i, std::clamp((value - lo) / (hi - lo), 0.0, 1.0)};
}

Vector4d box_fraction(const Box& box, const Vector4d& theta) {
  Vector4d f;
  for (int d = 0; d < 4; ++d) {
    f[d] = std::clamp((theta[d] - box.lo[d]) / (box.hi[d] - box.lo[d]), 0.0, 1.0);
  }
  return f;
}

std::string describe(const std::exception_ptr& error) {
  try {
    std::rethrow_exception(error);
  } catch (const std::exception& e) {
    return e.what();
  } catch (...) {
    return "unknown error";
  }
}

// Throws NodeFailure for the first failed index, if any.
void raise_first_failure(const std::vector<std::exception_ptr>& errors) {
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (errors[i]) throw NodeFailure(i, describe(errors[i]));
  }
}

using PointKey = std::array<double, 4>;

PointKey key_of(const Vector4d& v) { return {v[0], v[1], v[2], v[3]}; }

}  // namespace

GainMatrix gain_at(const ArmModel& arm, const CostWeights& weights, const Vector4d& theta) {
  const OperatingPoint op = equilibrium_point(arm, theta);
  const LinearModel model = linearize(arm, op);
  return lqr_gain(model.A, model.B, weights);
}

double spectral_norm(const GainMatrix& M) {
  Eigen::JacobiSVD<Eigen::Matrix<double, 4, 8>> svd(M);
  return svd.singularValues()[0];
}

void GridSpec::validate() const {
  for (const GridAxis& axis : axes) {
    if (!std::isfinite(axis.min) || !std::isfinite(axis.max) || !(axis.min < axis.max)) {
      throw InvalidArgument("grid axis requires finite min < max");
    }
    if (axis.count < 2) throw InvalidArgument("grid axis requires at least 2 nodes");
  }
}

std::size_t GridSpec::node_count() const {
  std::size_t n = 1;
  for (const GridAxis& axis : axes) n *= axis.count;
  return n;
}

std::size_t GridSpec::flat_index(const std::array<std::uint32_t, 4>& index) const {
  std::size_t flat = 0;
  for (int d = 0; d < 4; ++d) flat = flat * axes[d].count + index[d];
  return flat;
}

std::array<std::uint32_t, 4> GridSpec::unflatten(std::size_t flat) const {
  std::array<std::uint32_t, 4> index{};
  for (int d = 3; d >= 0; --d) {
    index[d] = static_cast<std::uint32_t>(flat % axes[d].count);
    flat /= axes[d].count;
  }
  return index;
}

Vector4d GridSpec::node(std::size_t flat) const {
  const auto index = unflatten(flat);
  Vector4d theta;
  for (int d = 0; d < 4; ++d) theta[d] = axes[d].node(index[d]);
  return theta;
}

Vector4d Box::corner(int c) const {
  Vector4d v;
  for (int d = 0; d < 4; ++d) v[d] = (c >> (3 - d)) & 1 ? hi[d] : lo[d];
  return v;
}

Box Box::child(int c) const {
  const Vector4d mid = center();
  Box out;
  for (int d = 0; d < 4; ++d) {
    const bool upper = (c >> (3 - d)) & 1;
    out.lo[d] = upper ? mid[d] : lo[d];
    out.hi[d] = upper ? hi[d] : mid[d];
  }
  return out;
}

bool Box::contains(const Vector4d& theta) const {
  return (theta.array() >= lo.array()).all() && (theta.array() <= hi.array()).all();
}

GainMatrix interpolate_corners(const std::array<const GainMatrix*, 16>& corners,
                               const Vector4d& fraction) {
  GainMatrix result;
  bool started = false;
  for (int c = 0; c < 16; ++c) {
    double w = 1.0;
    for (int d = 0; d < 4; ++d) {
      w *= (c >> (3 - d)) & 1 ? fraction[d] : 1.0 - fraction[d];
    }
    if (w == 0.0) continue;
    if (started) {
      result += w * *corners[c];
    } else {
      result = w * *corners[c];
      started = true;
    }
  }
  return result;
}

GainTable::GainTable(GridSpec spec, std::vector<GainMatrix> entries, ParameterDigest digest)
    : spec_(spec), entries_(std::move(entries)), digest_(digest) {
  spec_.validate();
  if (entries_.size() != spec_.node_count()) {
    throw InvalidArgument("entry count does not match the grid");
  }
}

Box GridSpec::bounds() const {
  Box box;
  for (int d = 0; d < 4; ++d) {
    box.lo[d] = axes[d].min;
    box.hi[d] = axes[d].max;
  }
  return box;
}

Box GainTable::bounds() const { return spec_.bounds(); }

GainMatrix GainTable::lookup(const JointAngles& angles) const {
  std::array<AxisPosition, 4> pos{};
  Vector4d fraction;
  for (int d = 0; d < 4; ++d) {
    pos[d] = locate(spec_.axes[d], angles[d], d);
    fraction[d] = pos[d].fraction;
  }
  std::array<const GainMatrix*, 16> corners{};
  for (int c = 0; c < 16; ++c) {
    std::array<std::uint32_t, 4> index{};
    for (int d = 0; d < 4; ++d) index[d] = pos[d].index + ((c >> (3 - d)) & 1);
    corners[c] = &entries_[spec_.flat_index(index)];
  }
  return interpolate_corners(corners, fraction);
}

GainTable precompute(const ArmModel& arm, const CostWeights& weights, const GridSpec& spec,
                     const ParallelOptions& options) {
  arm.validate();
  spec.validate();
  std::vector<GainMatrix> entries(spec.node_count());
  const auto errors = detail::parallel_for(entries.size(), options.workers, [&](std::size_t i) {
    entries[i] = gain_at(arm, weights, spec.node(i));
  });
  raise_first_failure(errors);
  return GainTable(spec, std::move(entries), parameter_digest(arm, weights));
}

RefinedTable::RefinedTable(std::vector<Cell> cells, double tolerance, int max_depth,
                           ParameterDigest digest, std::size_t solves)
    : cells_(std::move(cells)),
      tolerance_(tolerance),
      max_depth_(max_depth),
      digest_(digest),
      solves_(solves) {
  if (cells_.empty()) throw InvalidArgument("refined table needs a root cell");
}

const RefinedTable::Cell& RefinedTable::leaf_containing(const Vector4d& theta) const {
  const Cell* cell = &cells_.front();
  if (!cell->box.contains(theta)) {
    throw OutOfBounds("angles outside the refined table bounds");
  }
  while (!cell->leaf) {
    const Vector4d mid = cell->box.center();
    int c = 0;
    for (int d = 0; d < 4; ++d) {
      if (theta[d] >= mid[d]) c |= 1 << (3 - d);
    }
    cell = &cells_[cell->first_child + c];
  }
  return *cell;
}

GainMatrix RefinedTable::lookup(const JointAngles& angles) const {
  const Cell& leaf = leaf_containing(angles.vector());
  std::array<const GainMatrix*, 16> corners{};
  for (int c = 0; c < 16; ++c) corners[c] = &leaf.corners[c];
  return interpolate_corners(corners, box_fraction(leaf.box, angles.vector()));
}

std::size_t RefinedTable::leaf_count() const {
  return std::count_if(cells_.begin(), cells_.end(), [](const Cell& c) { return c.leaf; });
}

std::size_t RefinedTable::flagged_count() const {
  return std::count_if(cells_.begin(), cells_.end(), [](const Cell& c) { return c.flagged; });
}

int RefinedTable::depth() const {
  int depth = 0;
  for (const Cell& c : cells_) depth = std::max(depth, c.depth);
  return depth;
}

RefinedTable refine(const ArmModel& arm, const CostWeights& weights, const Box& root,
                    double tolerance, int max_depth, const ParallelOptions& options) {
  arm.validate();
  if (!(tolerance > 0.0)) throw InvalidArgument("refinement tolerance must be positive");
  if (max_depth < 1) throw InvalidArgument("max_depth must be at least 1");
  if (!root.lo.allFinite() || !root.hi.allFinite() ||
      !(root.lo.array() < root.hi.array()).all()) {
    throw InvalidArgument("refinement box requires finite lo < hi");
  }
  const bool measure = std::isfinite(tolerance);

  std::vector<RefinedTable::Cell> cells(1);
  cells[0].box = root;
  cells[0].depth = 1;

  // Gains keyed by exact coordinates. Bisection midpoints are computed the
  // same way from every side, so shared corners hit the cache.
  std::map<PointKey, GainMatrix> solved;
  std::size_t solves = 0;

  std::vector<std::uint32_t> frontier{0};
  while (!frontier.empty()) {
    // Collect unsolved sample points for this level in a fixed order.
    std::map<PointKey, std::size_t> pending;
    std::vector<Vector4d> points;
    auto request = [&](const Vector4d& p) {
      const PointKey key = key_of(p);
      if (solved.count(key) || pending.count(key)) return;
      pending.emplace(key, points.size());
      points.push_back(p);
    };
    for (std::uint32_t idx : frontier) {
      for (int c = 0; c < 16; ++c) request(cells[idx].box.corner(c));
      if (measure) request(cells[idx].box.center());
    }

    std::vector<GainMatrix> gains(points.size());
    const auto errors = detail::parallel_for(points.size(), options.workers, [&](std::size_t i) {
      gains[i] = gain_at(arm, weights, points[i]);
    });
    for (std::size_t i = 0; i < errors.size(); ++i) {
      if (errors[i]) throw NodeFailure(solves + i, describe(errors[i]));
    }
    solves += points.size();
    for (std::size_t i = 0; i < points.size(); ++i) solved.emplace(key_of(points[i]), gains[i]);

    std::vector<std::uint32_t> next;
    for (std::uint32_t idx : frontier) {
      RefinedTable::Cell& cell = cells[idx];
      for (int c = 0; c < 16; ++c) cell.corners[c] = solved.at(key_of(cell.box.corner(c)));
      if (!measure) {
        cell.center_error = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      std::array<const GainMatrix*, 16> corners{};
      for (int c = 0; c < 16; ++c) corners[c] = &cell.corners[c];
      const GainMatrix blended = interpolate_corners(corners, Vector4d::Constant(0.5));
      cell.center_error = spectral_norm(blended - solved.at(key_of(cell.box.center())));
      if (cell.center_error <= tolerance) continue;
      if (cell.depth >= max_depth) {
        cell.flagged = true;
        continue;
      }
      const auto first = static_cast<std::uint32_t>(cells.size());
      const Box box = cell.box;
      const int depth = cell.depth;
      cell.leaf = false;
      cell.first_child = first;
      // `cell` may dangle after the resize below.
      cells.resize(cells.size() + 16);
      for (int c = 0; c < 16; ++c) {
        cells[first + c].box = box.child(c);
        cells[first + c].depth = depth + 1;
        next.push_back(first + c);
      }
    }
    frontier = std::move(next);
  }

  return RefinedTable(std::move(cells), tolerance, max_depth, parameter_digest(arm, weights),
                      solves);
}

GainMatrix lookup(const AnyTable& table, const JointAngles& angles) {
  return std::visit([&](const auto& t) { return t.lookup(angles); }, table);
}

const ParameterDigest& digest_of(const AnyTable& table) {
  return std::visit([](const auto& t) -> const ParameterDigest& { return t.digest(); }, table);
}

}  // namespace arm4
