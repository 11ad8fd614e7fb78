#include <bit>
#include <cmath>
#include <cstring>
#include <string>

#include <openssl/evp.h>

#include "arm4/gain_table.hpp"

namespace arm4 {

namespace {

constexpr std::array<std::uint8_t, 4> kGridMagic{'A', 'G', 'T', '1'};
constexpr std::array<std::uint8_t, 4> kRefinedMagic{'A', 'G', 'R', '1'};
constexpr std::uint32_t kDimensions = 4;

enum class CellTag : std::uint8_t { kLeaf = 0, kInternal = 1, kFlaggedLeaf = 2 };

class Writer {
 public:
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void gain(const GainMatrix& K) {
    for (Eigen::Index i = 0; i < K.size(); ++i) f64(K.data()[i]);
  }

  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::span<const std::uint8_t> bytes(std::size_t n) {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8() { return bytes(1)[0]; }
  std::uint32_t u32() {
    auto b = bytes(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  std::uint64_t u64() {
    auto b = bytes(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  GainMatrix gain() {
    GainMatrix K;
    for (Eigen::Index i = 0; i < K.size(); ++i) K.data()[i] = f64();
    return K;
  }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw TruncatedData("table data ends early");
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

void append_doubles(std::vector<std::uint8_t>& out, std::initializer_list<double> values) {
  for (double v : values) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
}

void append_matrix(std::vector<std::uint8_t>& out, const Eigen::MatrixXd& M) {
  append_doubles(out, {static_cast<double>(M.rows()), static_cast<double>(M.cols())});
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) append_doubles(out, {M(i, j)});
  }
}

void write_header(Writer& w, const std::array<std::uint8_t, 4>& magic, const Box& box,
                  const std::array<std::uint32_t, 4>& counts, const ParameterDigest& digest) {
  w.bytes(magic);
  w.u32(kTableFormatVersion);
  w.u32(kDimensions);
  for (int d = 0; d < 4; ++d) {
    w.f64(box.lo[d]);
    w.f64(box.hi[d]);
    w.u32(counts[d]);
  }
  w.bytes(digest);
}

struct Header {
  GridSpec spec;
  ParameterDigest digest;
};

Header read_header(Reader& r, const std::array<std::uint8_t, 4>& magic,
                   const ParameterDigest* expected) {
  const auto m = r.bytes(4);
  if (!std::equal(m.begin(), m.end(), magic.begin())) throw BadMagic("not a gain table file");
  const std::uint32_t version = r.u32();
  if (version != kTableFormatVersion) {
    throw VersionMismatch("unsupported table format version " + std::to_string(version));
  }
  const std::uint32_t dims = r.u32();
  if (dims != kDimensions) {
    throw VersionMismatch("unsupported dimension count " + std::to_string(dims));
  }
  Header h;
  for (auto& axis : h.spec.axes) {
    axis.min = r.f64();
    axis.max = r.f64();
    axis.count = r.u32();
  }
  const auto d = r.bytes(32);
  std::copy(d.begin(), d.end(), h.digest.begin());
  h.spec.validate();
  if (expected && *expected != h.digest) {
    throw DigestMismatch("table was built for different arm parameters or weights");
  }
  return h;
}

void write_cell(Writer& w, const std::vector<RefinedTable::Cell>& cells, std::uint32_t idx) {
  const auto& cell = cells[idx];
  if (!cell.leaf) {
    w.u8(static_cast<std::uint8_t>(CellTag::kInternal));
    for (int c = 0; c < 16; ++c) write_cell(w, cells, cell.first_child + c);
    return;
  }
  w.u8(static_cast<std::uint8_t>(cell.flagged ? CellTag::kFlaggedLeaf : CellTag::kLeaf));
  w.f64(cell.center_error);
  for (const auto& K : cell.corners) w.gain(K);
}

// Rebuilds cells in breadth-first order (children contiguous) from pre-order.
void read_cell(Reader& r, std::vector<RefinedTable::Cell>& cells, std::uint32_t idx,
               int max_depth) {
  const std::uint8_t tag = r.u8();
  if (tag == static_cast<std::uint8_t>(CellTag::kInternal)) {
    if (cells[idx].depth >= max_depth) throw InvalidArgument("refined table exceeds max depth");
    const auto first = static_cast<std::uint32_t>(cells.size());
    const Box box = cells[idx].box;
    const int depth = cells[idx].depth;
    cells[idx].leaf = false;
    cells[idx].first_child = first;
    cells.resize(cells.size() + 16);
    for (int c = 0; c < 16; ++c) {
      cells[first + c].box = box.child(c);
      cells[first + c].depth = depth + 1;
    }
    for (int c = 0; c < 16; ++c) read_cell(r, cells, first + c, max_depth);
    return;
  }
  if (tag != static_cast<std::uint8_t>(CellTag::kLeaf) &&
      tag != static_cast<std::uint8_t>(CellTag::kFlaggedLeaf)) {
    throw InvalidArgument("unknown cell tag " + std::to_string(tag));
  }
  auto& cell = cells[idx];
  cell.leaf = true;
  cell.flagged = tag == static_cast<std::uint8_t>(CellTag::kFlaggedLeaf);
  cell.center_error = r.f64();
  for (auto& K : cell.corners) K = r.gain();
}

}  // namespace

ParameterDigest parameter_digest(const ArmModel& arm, const CostWeights& weights) {
  std::vector<std::uint8_t> buf;
  const ArmGeometry& g = arm.geometry;
  const MassModel& m = arm.masses;
  append_doubles(buf, {g.L1, g.L2, g.L3, m.m2, m.m3, m.m4, m.M1, m.M2, m.M3, m.g});
  append_matrix(buf, weights.Q());
  append_matrix(buf, weights.R());

  ParameterDigest digest{};
  unsigned int length = 0;
  if (EVP_Digest(buf.data(), buf.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1 ||
      length != digest.size()) {
    throw Error("SHA-256 digest failed");
  }
  return digest;
}

std::vector<std::uint8_t> save(const GainTable& table) {
  Writer w;
  std::array<std::uint32_t, 4> counts{};
  for (int d = 0; d < 4; ++d) counts[d] = table.spec().axes[d].count;
  write_header(w, kGridMagic, table.bounds(), counts, table.digest());
  for (const auto& K : table.entries()) w.gain(K);
  return w.take();
}

std::vector<std::uint8_t> save(const RefinedTable& table) {
  Writer w;
  write_header(w, kRefinedMagic, table.bounds(), {2, 2, 2, 2}, table.digest());
  w.f64(table.tolerance());
  w.u32(static_cast<std::uint32_t>(table.max_depth()));
  write_cell(w, table.cells(), 0);
  return w.take();
}

GainTable load_grid(std::span<const std::uint8_t> bytes, const ParameterDigest* expected) {
  Reader r(bytes);
  const Header h = read_header(r, kGridMagic, expected);
  const std::size_t n = h.spec.node_count();
  if (r.remaining() / (sizeof(double) * 32) < n) throw TruncatedData("table entries truncated");
  std::vector<GainMatrix> entries(n);
  for (auto& K : entries) K = r.gain();
  if (r.remaining() != 0) throw InvalidArgument("trailing bytes after table entries");
  return GainTable(h.spec, std::move(entries), h.digest);
}

RefinedTable load_refined(std::span<const std::uint8_t> bytes, const ParameterDigest* expected) {
  Reader r(bytes);
  const Header h = read_header(r, kRefinedMagic, expected);
  const double tolerance = r.f64();
  const auto max_depth = static_cast<int>(r.u32());
  if (!(tolerance > 0.0) || max_depth < 1) throw InvalidArgument("bad refinement parameters");
  std::vector<RefinedTable::Cell> cells(1);
  for (int d = 0; d < 4; ++d) {
    cells[0].box.lo[d] = h.spec.axes[d].min;
    cells[0].box.hi[d] = h.spec.axes[d].max;
  }
  read_cell(r, cells, 0, max_depth);
  if (r.remaining() != 0) throw InvalidArgument("trailing bytes after refined table");
  return RefinedTable(std::move(cells), tolerance, max_depth, h.digest);
}

AnyTable load(std::span<const std::uint8_t> bytes, const ParameterDigest* expected) {
  if (bytes.size() < 4) throw TruncatedData("table data ends early");
  if (std::equal(kRefinedMagic.begin(), kRefinedMagic.end(), bytes.begin())) {
    return load_refined(bytes, expected);
  }
  return load_grid(bytes, expected);
}

}  // namespace arm4
