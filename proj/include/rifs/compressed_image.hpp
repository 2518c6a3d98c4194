#pragma once

// In-memory form of an encoded image: codec parameters, the quadtree of
// split flags, one RegionCode per leaf and the vertex plane.
//
// Domain pools are implicit. At quadtree depth t the region side is
// cell >> t, the domain side is a * (cell >> t) and domains sit on a lattice
// of stride max(1, stride >> t), numbered row-major from the top-left.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rifs/contractivity_field.hpp"
#include "rifs/error.hpp"
#include "rifs/grid_model.hpp"

namespace rifs {

inline constexpr int kMaxPoolSize = 65536;  // domain ids are stored as u16

struct CodecParams {
  int width = 0;
  int height = 0;
  int region_cell = 32;
  int domain_factor = 2;
  int domain_stride = 64;
  int delta = 4;
  int d_max_percent = 95;

  double d_max() const noexcept { return d_max_percent / 100.0; }

  int cell_at(int depth) const noexcept { return region_cell >> depth; }
  int domain_side_at(int depth) const noexcept { return domain_factor * cell_at(depth); }
  int stride_at(int depth) const noexcept { return std::max(1, domain_stride >> depth); }

  /// Smallest region side that may still be produced by a split.
  int min_cell() const noexcept { return std::max(kMinRegionCell, delta); }

  int pool_columns(int depth) const noexcept {
    const int side = domain_side_at(depth);
    return side > width - 1 ? 0 : (width - 1 - side) / stride_at(depth) + 1;
  }
  int pool_rows(int depth) const noexcept {
    const int side = domain_side_at(depth);
    return side > height - 1 ? 0 : (height - 1 - side) / stride_at(depth) + 1;
  }
  long long pool_size(int depth) const noexcept {
    return static_cast<long long>(pool_columns(depth)) * pool_rows(depth);
  }

  Rect domain_rect(int depth, int id) const {
    if (id < 0 || id >= pool_size(depth))
      throw CorruptCode("domain id " + std::to_string(id) + " outside pool of " +
                        std::to_string(pool_size(depth)) + " at depth " + std::to_string(depth));
    const int cols = pool_columns(depth);
    const int s = stride_at(depth);
    const int side = domain_side_at(depth);
    const int x0 = (id % cols) * s;
    const int y0 = (id / cols) * s;
    return {x0, y0, x0 + side, y0 + side};
  }

  int top_columns() const noexcept { return (width - 1) / region_cell; }
  int top_rows() const noexcept { return (height - 1) / region_cell; }

  bool operator==(const CodecParams&) const = default;
};

/// Throws when the parameters cannot describe a codec for their image size.
inline void validate(const CodecParams& p) {
  auto power_of_two = [](int v) { return v > 0 && (v & (v - 1)) == 0; };
  if (p.width < 2 || p.height < 2 || p.width > 65535 || p.height > 65535)
    throw ConfigError("image size out of range");
  if (!power_of_two(p.region_cell) || p.region_cell < kMinRegionCell || p.region_cell > 32768)
    throw ConfigError("region cell must be a power of two >= " + std::to_string(kMinRegionCell));
  if ((p.width - 1) % p.region_cell != 0 || (p.height - 1) % p.region_cell != 0)
    throw DivisibilityError("image sides minus one (" + std::to_string(p.width - 1) + ", " +
                            std::to_string(p.height - 1) + ") must be divisible by cell " +
                            std::to_string(p.region_cell));
  if (p.domain_factor < 2 || p.domain_factor > 255)
    throw ConfigError("domain factor must be an integer in [2, 255]");
  if (p.domain_stride < 1 || p.domain_stride > 65535)
    throw ConfigError("domain stride must be in [1, 65535]");
  if (!power_of_two(p.delta) || p.delta < 2 || p.delta > p.region_cell || p.delta > 255)
    throw ConfigError("delta must be a power of two in [2, cell]");
  if (p.d_max_percent < 1 || p.d_max_percent > 99) throw ConfigError("d_max must lie in (0, 1)");
  if (p.pool_size(0) == 0)
    throw EmptyPool("domain side " + std::to_string(p.domain_side_at(0)) +
                    " does not fit the image");
  if (p.pool_size(0) > kMaxPoolSize) throw ConfigError("domain pool too large; raise the stride");
}

struct RegionCode {
  Rect region;
  int depth = 0;
  int domain_id = 0;
  int orientation = 0;
  ContractivityField field;
  double rms = 0.0;  // selection-time error; not part of the stream

  bool same_structure(const RegionCode& o) const {
    return region == o.region && depth == o.depth && domain_id == o.domain_id &&
           orientation == o.orientation && field == o.field;
  }
};

struct Vertex {
  int x = 0;
  int y = 0;
  std::uint8_t z = 0;

  bool operator==(const Vertex&) const = default;
};

struct CompressedImage {
  CodecParams params;
  std::vector<bool> split_bits;  // pre-order, top-level regions row-major
  std::vector<RegionCode> codes;  // leaves in the same order
  std::vector<Vertex> vertices;   // sorted by (y, x)

  /// Equality of everything that is serialized.
  bool same_structure(const CompressedImage& o) const {
    if (!(params == o.params) || split_bits != o.split_bits || vertices != o.vertices ||
        codes.size() != o.codes.size())
      return false;
    for (std::size_t i = 0; i < codes.size(); ++i)
      if (!codes[i].same_structure(o.codes[i])) return false;
    return true;
  }
};

struct Leaf {
  Rect rect;
  int depth = 0;
};

/// Walks the split bits and returns the leaves in stream order. `consumed`
/// receives the number of bits read. Throws CorruptCode on an impossible tree
/// and TruncatedStream when the bits run out.
template <class BitSource>
std::vector<Leaf> leaves_from_bits(const CodecParams& p, BitSource&& next_bit,
                                   std::size_t* consumed = nullptr) {
  std::vector<Leaf> leaves;
  std::size_t used = 0;
  auto visit = [&](auto&& self, const Rect& r, int depth) -> void {
    const bool split = next_bit();
    ++used;
    if (!split) {
      leaves.push_back({r, depth});
      return;
    }
    const int side = r.width();
    if (side % 2 != 0 || side / 2 < p.min_cell())
      throw CorruptCode("split below the minimum region size at " + to_string(r));
    const int h = side / 2;
    self(self, Rect{r.x0, r.y0, r.x0 + h, r.y0 + h}, depth + 1);
    self(self, Rect{r.x0 + h, r.y0, r.x1, r.y0 + h}, depth + 1);
    self(self, Rect{r.x0, r.y0 + h, r.x0 + h, r.y1}, depth + 1);
    self(self, Rect{r.x0 + h, r.y0 + h, r.x1, r.y1}, depth + 1);
  };
  const int c = p.region_cell;
  for (int j = 0; j < p.top_rows(); ++j)
    for (int i = 0; i < p.top_columns(); ++i)
      visit(visit, Rect{i * c, j * c, (i + 1) * c, (j + 1) * c}, 0);
  if (consumed) *consumed = used;
  return leaves;
}

inline std::vector<Leaf> leaves_from_bits(const CodecParams& p, const std::vector<bool>& bits) {
  std::size_t pos = 0;
  auto leaves = leaves_from_bits(p, [&] {
    if (pos >= bits.size()) throw CorruptCode("split bits end early");
    return static_cast<bool>(bits[pos++]);
  });
  if (pos != bits.size()) throw CorruptCode("unused split bits");
  return leaves;
}

/// Vertices the decoder needs: every leaf corner and every corner of every
/// referenced domain, sorted by (y, x).
inline std::vector<std::pair<int, int>> vertex_positions(const CodecParams& p,
                                                         const std::vector<Leaf>& leaves,
                                                         const std::vector<int>& domain_ids) {
  std::vector<std::pair<int, int>> v;  // (y, x)
  v.reserve(leaves.size() * 8);
  auto corners = [&](const Rect& r) {
    v.emplace_back(r.y0, r.x0);
    v.emplace_back(r.y0, r.x1);
    v.emplace_back(r.y1, r.x0);
    v.emplace_back(r.y1, r.x1);
  };
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    corners(leaves[i].rect);
    corners(p.domain_rect(leaves[i].depth, domain_ids[i]));
  }
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

inline std::vector<Vertex> vertex_plane(const CodecParams& p, const std::vector<Leaf>& leaves,
                                        const std::vector<int>& domain_ids,
                                        const Image& image) {
  std::vector<Vertex> out;
  for (auto [y, x] : vertex_positions(p, leaves, domain_ids))
    out.push_back({x, y, to_byte(image(x, y))});
  return out;
}

// Field ratios are stored as q in [1, 255] with value (q - 128) * d_max / 127.5.
// Zero is exact and the rounding error never exceeds d_max / 255. Code 0 reads
// back as slightly more than d_max in magnitude and is caught by verification.
inline constexpr int kRatioZeroCode = 128;
inline constexpr double kRatioScale = 127.5;

inline std::uint8_t quantize_ratio(double r, double d_max) noexcept {
  const double s = r / d_max * kRatioScale;
  // code 0 only for values already beyond -d_max, so every byte round-trips
  const int lo = s < -kRatioScale ? 0 : 1;
  const double q = std::round(std::clamp(s, -kRatioScale - 1.0, kRatioScale));
  return static_cast<std::uint8_t>(std::clamp(static_cast<int>(q) + kRatioZeroCode, lo, 255));
}

inline double dequantize_ratio(std::uint8_t q, double d_max) noexcept {
  return (static_cast<int>(q) - kRatioZeroCode) * d_max / kRatioScale;
}

/// The code as it will read back from a stream.
inline CompressedImage quantized(CompressedImage code) {
  const double d_max = code.params.d_max();
  for (auto& c : code.codes) {
    for (double& r : c.field.ratios) r = dequantize_ratio(quantize_ratio(r, d_max), d_max);
    c.field.d_max = d_max;
  }
  return code;
}

}  // namespace rifs
