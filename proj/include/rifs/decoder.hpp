#pragma once

// Deterministic iteration decoding. The encoded maps are compiled once into a
// per-pixel affine operator
//
//   new[p] = d[p] * (old[pre[p]] - g[p]) + h[p]
//
// and applied as Jacobi sweeps: every read comes from the previous buffer.
// Each pixel is written by exactly one leaf (rects are half-open on their
// right / bottom side except at the image border). Vertices that are not a
// corner of the leaf owning them (T-junctions, interior domain corners) are
// pinned to their stored value.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rifs/bilinear.hpp"
#include "rifs/compressed_image.hpp"
#include "rifs/contractivity_field.hpp"
#include "rifs/error.hpp"
#include "rifs/plane.hpp"
#include "rifs/rifs_core.hpp"

namespace rifs {

inline constexpr double kFlatInitial = 128.0;

class VertexLookup {
 public:
  explicit VertexLookup(const std::vector<Vertex>& v) : v_(v) {}

  double z(int x, int y) const {
    auto it = std::lower_bound(v_.begin(), v_.end(), std::pair{y, x}, [](const Vertex& a, auto b) {
      return std::pair{a.y, a.x} < b;
    });
    if (it == v_.end() || it->x != x || it->y != y)
      throw CorruptCode("vertex (" + std::to_string(x) + ", " + std::to_string(y) +
                        ") missing from the vertex plane");
    return it->z;
  }

 private:
  const std::vector<Vertex>& v_;
};

namespace detail {

/// Structural checks shared by the decoder and map extraction.
inline std::vector<Leaf> checked_leaves(const CompressedImage& code) {
  try {
    validate(code.params);
  } catch (const Error& e) {
    throw CorruptCode(std::string("invalid parameters: ") + e.what());
  }
  const auto leaves = leaves_from_bits(code.params, code.split_bits);
  if (leaves.size() != code.codes.size())
    throw CorruptCode("tree has " + std::to_string(leaves.size()) + " leaves but " +
                      std::to_string(code.codes.size()) + " region codes are present");
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    const RegionCode& c = code.codes[i];
    if (c.region != leaves[i].rect || c.depth != leaves[i].depth)
      throw CorruptCode("region code " + std::to_string(i) + " does not match the tree");
    if (c.orientation < 0 || c.orientation >= kOrientationCount)
      throw CorruptCode("bad orientation in region code " + std::to_string(i));
    const auto expected = static_cast<std::size_t>(code.params.delta + 1) * (code.params.delta + 1);
    if (c.field.rect != c.region || c.field.delta_x != code.params.delta ||
        c.field.delta_y != code.params.delta || c.field.ratios.size() != expected)
      throw CorruptCode("field shape mismatch in region code " + std::to_string(i));
    code.params.domain_rect(c.depth, c.domain_id);  // throws CorruptCode
  }
  return leaves;
}

inline int owned_end(int hi, int border) noexcept { return hi == border ? hi : hi - 1; }

}  // namespace detail

class DecodeOperator {
 public:
  explicit DecodeOperator(const CompressedImage& code)
      : width_(code.params.width), height_(code.params.height) {
    const auto leaves = detail::checked_leaves(code);
    const CodecParams& p = code.params;
    const VertexLookup vertices(code.vertices);
    const std::size_t n_pixels = static_cast<std::size_t>(width_) * height_;
    pre_.assign(n_pixels, 0);
    d_.assign(n_pixels, 0.0);
    g_.assign(n_pixels, 0.0);
    h_.assign(n_pixels, 0.0);
    std::vector<std::int32_t> owner(n_pixels, -1);

    for (std::size_t li = 0; li < code.codes.size(); ++li) {
      const RegionCode& c = code.codes[li];
      const Rect& r = c.region;
      const Rect dom = p.domain_rect(c.depth, c.domain_id);
      const int n = r.width();
      const int step = dom.width() / n;
      const BilinearPatch g{dom, {vertices.z(dom.x0, dom.y0), vertices.z(dom.x1, dom.y0),
                                  vertices.z(dom.x0, dom.y1), vertices.z(dom.x1, dom.y1)}};
      const BilinearPatch h{r, {vertices.z(r.x0, r.y0), vertices.z(r.x1, r.y0),
                                vertices.z(r.x0, r.y1), vertices.z(r.x1, r.y1)}};
      const double field_step = static_cast<double>(n) / c.field.delta_x;
      const bool fx = flips_x(c.orientation);
      const bool fy = flips_y(c.orientation);
      for (int y = r.y0; y <= detail::owned_end(r.y1, height_ - 1); ++y) {
        const int v = y - r.y0;
        const AxisWeight wy = axis_weight(v, field_step, c.field.delta_y);
        const int sy = dom.y0 + step * (fy ? n - v : v);
        for (int x = r.x0; x <= detail::owned_end(r.x1, width_ - 1); ++x) {
          const int u = x - r.x0;
          const int sx = dom.x0 + step * (fx ? n - u : u);
          const std::size_t i = index(x, y);
          if (owner[i] != -1) throw CorruptCode("regions overlap at (" + std::to_string(x) + ", " + std::to_string(y) + ")");
          owner[i] = static_cast<std::int32_t>(li);
          pre_[i] = static_cast<std::uint32_t>(index(sx, sy));
          d_[i] = eval_field_weights(c.field, axis_weight(u, field_step, c.field.delta_x), wy);
          g_[i] = eval_bilinear_unchecked(g, sx, sy);
          h_[i] = eval_bilinear_unchecked(h, x, y);
        }
      }
    }
    if (std::find(owner.begin(), owner.end(), -1) != owner.end())
      throw CorruptCode("regions do not cover the image");

    for (const Vertex& vx : code.vertices) {
      if (vx.x < 0 || vx.y < 0 || vx.x >= width_ || vx.y >= height_)
        throw CorruptCode("vertex outside the image");
      const std::size_t i = index(vx.x, vx.y);
      const Rect& r = code.codes[static_cast<std::size_t>(owner[i])].region;
      const bool corner = (vx.x == r.x0 || vx.x == r.x1) && (vx.y == r.y0 || vx.y == r.y1);
      if (corner) continue;
      pre_[i] = static_cast<std::uint32_t>(i);
      d_[i] = 0.0;
      g_[i] = 0.0;
      h_[i] = vx.z;
      ++pinned_;
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pinned() const noexcept { return pinned_; }

  /// One Jacobi sweep; returns sup |out - in|.
  double apply(const Image& in, Image& out) const {
    if (in.width() != width_ || in.height() != height_)
      throw DimensionMismatch("buffer is " + std::to_string(in.width()) + "x" +
                              std::to_string(in.height()) + ", code is " +
                              std::to_string(width_) + "x" + std::to_string(height_));
    if (out.width() != width_ || out.height() != height_) out = Image(width_, height_);
    auto src = in.values();
    auto dst = out.values();
    double delta = 0.0;
    for (std::size_t i = 0; i < dst.size(); ++i) {
      const double v = d_[i] * (src[pre_[i]] - g_[i]) + h_[i];
      delta = std::max(delta, std::abs(v - src[i]));
      dst[i] = v;
    }
    return delta;
  }

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_;
  int height_;
  std::size_t pinned_ = 0;
  std::vector<std::uint32_t> pre_;
  std::vector<double> d_;
  std::vector<double> g_;
  std::vector<double> h_;
};

struct DecodeState {
  Image buffer;
  int iteration = 0;
  double last_delta = 0.0;
};

inline DecodeState initial_state(const CompressedImage& code, double fill = kFlatInitial) {
  return {Image(code.params.width, code.params.height, fill), 0, 0.0};
}

inline DecodeState decode_sweep(const DecodeOperator& op, const DecodeState& state) {
  DecodeState next;
  next.last_delta = op.apply(state.buffer, next.buffer);
  next.iteration = state.iteration + 1;
  return next;
}

inline DecodeState decode_sweep(const CompressedImage& code, const DecodeState& state) {
  return decode_sweep(DecodeOperator(code), state);
}

struct DecodeResult {
  Gray8 image;           // clamped output
  Image raw;             // final iterate, unclamped
  int iterations = 0;
  double last_delta = 0.0;
  std::vector<double> deltas;  // last_delta after each sweep
};

/// Sweeps until last_delta < eps or max_iter sweeps have run. `initial`
/// defaults to a flat mid-gray buffer.
inline DecodeResult decode(const CompressedImage& code, int max_iter, double eps,
                           const std::optional<Image>& initial = std::nullopt) {
  if (max_iter < 1) throw RangeError("max_iter must be >= 1");
  if (!(eps >= 0.0)) throw RangeError("eps must be >= 0");
  const DecodeOperator op(code);
  DecodeState state = initial_state(code);
  if (initial) {
    if (initial->width() != op.width() || initial->height() != op.height())
      throw DimensionMismatch("initial buffer does not match the code dimensions");
    state.buffer = *initial;
  }
  DecodeResult result;
  Image next;
  for (int k = 0; k < max_iter; ++k) {
    state.last_delta = op.apply(state.buffer, next);
    std::swap(state.buffer, next);
    ++state.iteration;
    result.deltas.push_back(state.last_delta);
    if (state.last_delta < eps) break;
  }
  result.iterations = state.iteration;
  result.last_delta = state.last_delta;
  result.image = to_gray8(state.buffer);
  result.raw = std::move(state.buffer);
  return result;
}

/// sup |image - T(image)|; zero exactly at the discrete fixed point.
inline double fixed_point_residual(const CompressedImage& code, const Image& image) {
  Image out;
  return DecodeOperator(code).apply(image, out);
}

/// The continuous maps w = (L, F) described by a code, one per leaf.
inline std::vector<RifsMap> maps_from_code(const CompressedImage& code) {
  detail::checked_leaves(code);
  const VertexLookup vertices(code.vertices);
  std::vector<RifsMap> maps;
  maps.reserve(code.codes.size());
  for (const RegionCode& c : code.codes) {
    const Rect dom = code.params.domain_rect(c.depth, c.domain_id);
    const Rect& r = c.region;
    const PlanarMap planar = make_planar_map(dom, r, flips_x(c.orientation), flips_y(c.orientation));
    const BilinearPatch g{dom, {vertices.z(dom.x0, dom.y0), vertices.z(dom.x1, dom.y0),
                                vertices.z(dom.x0, dom.y1), vertices.z(dom.x1, dom.y1)}};
    const BilinearPatch h{r, {vertices.z(r.x0, r.y0), vertices.z(r.x1, r.y0),
                              vertices.z(r.x0, r.y1), vertices.z(r.x1, r.y1)}};
    maps.push_back(make_rifs_map(planar, c.field, g, h));
  }
  return maps;
}

}  // namespace rifs
