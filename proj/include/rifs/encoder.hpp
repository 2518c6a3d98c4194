#pragma once

// Quadtree encoder. Each region is matched against a pool of domains a times
// its size; the vertical map uses the contractivity field estimated from the
// pair. Regions whose best match exceeds the tolerance are split into four
// and retried, down to max_split_depth where the best candidate is kept.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rifs/bilinear.hpp"
#include "rifs/compressed_image.hpp"
#include "rifs/contractivity_field.hpp"
#include "rifs/error.hpp"
#include "rifs/grid_model.hpp"
#include "rifs/parallel.hpp"
#include "rifs/plane.hpp"

namespace rifs {

struct EncoderConfig {
  int region_cell = 32;
  int domain_factor = 2;
  int domain_stride = 0;  // 0: domain side, i.e. a non-overlapping pool
  double tolerance = 8.0;
  double d_max = 0.95;
  int delta = 4;
  int max_split_depth = 3;
  bool search_orientations = true;
  unsigned threads = 0;  // 0: RIFS_THREADS or hardware concurrency
};

/// Codec parameters for an image of the given size; throws on bad settings.
inline CodecParams params_for(const EncoderConfig& c, int width, int height) {
  if (!(c.tolerance >= 0.0) || !std::isfinite(c.tolerance))
    throw ConfigError("tolerance must be finite and >= 0");
  if (c.max_split_depth < 0) throw ConfigError("max split depth must be >= 0");
  if (!(c.d_max > 0.0 && c.d_max < 1.0)) throw ConfigError("d_max must lie in (0, 1)");
  const double percent = c.d_max * 100.0;
  if (std::abs(percent - std::round(percent)) > 1e-6)
    throw ConfigError("d_max must be a multiple of 0.01");
  if (c.region_cell < kMinRegionCell || (c.region_cell & (c.region_cell - 1)) != 0)
    throw ConfigError("region cell must be a power of two >= " + std::to_string(kMinRegionCell));
  CodecParams p;
  p.width = width;
  p.height = height;
  p.region_cell = c.region_cell;
  p.domain_factor = c.domain_factor;
  p.domain_stride = c.domain_stride != 0 ? c.domain_stride : c.domain_factor * c.region_cell;
  p.delta = c.delta;
  p.d_max_percent = static_cast<int>(std::round(percent));
  if ((width - 1) % c.region_cell != 0 || (height - 1) % c.region_cell != 0)
    throw DivisibilityError("image sides minus one (" + std::to_string(width - 1) + ", " +
                            std::to_string(height - 1) + ") must be divisible by cell " +
                            std::to_string(c.region_cell));
  validate(p);
  return p;
}

/// Deepest quadtree level the encoder may reach.
inline int deepest_level(const CodecParams& p, const EncoderConfig& c) {
  int t = 0;
  while (t < c.max_split_depth && p.cell_at(t + 1) >= p.min_cell() && p.cell_at(t) % 2 == 0) ++t;
  return t;
}

/// Domains of the pool at the given depth, with their corners registered as
/// grid points of a partition of the image.
inline std::vector<Domain> build_domain_pool(const Image& image, const EncoderConfig& config,
                                             int depth = 0) {
  const CodecParams p = params_for(config, image.width(), image.height());
  const long long n = p.pool_size(depth);
  if (n == 0) throw EmptyPool("no domain of side " + std::to_string(p.domain_side_at(depth)) + " fits");
  std::vector<Rect> rects;
  rects.reserve(static_cast<std::size_t>(n));
  for (int id = 0; id < n; ++id) rects.push_back(p.domain_rect(depth, id));
  Partition grid = build_partition(image.width(), image.height(), p.cell_at(depth));
  grid.add_domains(rects);
  return grid.domains();
}

// Per-rect data reused across candidate pairs.
struct PreparedDomain {
  Rect rect;
  DistanceGrid grid;  // zero entries resampled
  int lattice = 0;    // region side n; samples at X0 + a*u for u in [0, n]
  std::vector<double> lattice_deviation;  // I - g, (n+1)^2, row-major
};

struct PreparedRegion {
  Rect rect;
  DistanceGrid grid;
  std::vector<double> target;  // I on the region pixels, (n+1)^2
  std::vector<double> h;       // bilinear corner patch on the region pixels
  std::vector<AxisWeight> wx;  // field interpolation weights per column
  std::vector<AxisWeight> wy;
};

inline PreparedDomain prepare_domain(const Image& image, const Rect& domain, int region_side,
                                     int delta) {
  PreparedDomain d;
  d.rect = domain;
  d.grid = distance_grid(image, domain, delta, delta);
  resample_zero_entries(image, d.grid);
  d.lattice = region_side;
  const int step = domain.width() / region_side;
  const BilinearPatch g = patch_from_image(image, domain);
  d.lattice_deviation.resize(static_cast<std::size_t>(region_side + 1) * (region_side + 1));
  for (int v = 0; v <= region_side; ++v)
    for (int u = 0; u <= region_side; ++u) {
      const int x = domain.x0 + step * u;
      const int y = domain.y0 + step * v;
      d.lattice_deviation[static_cast<std::size_t>(v) * (region_side + 1) + u] =
          image(x, y) - eval_bilinear_unchecked(g, x, y);
    }
  return d;
}

inline PreparedRegion prepare_region(const Image& image, const Rect& region, int delta) {
  PreparedRegion r;
  r.rect = region;
  r.grid = distance_grid(image, region, delta, delta);
  const int n = region.width();
  const BilinearPatch h = patch_from_image(image, region);
  r.target.resize(static_cast<std::size_t>(n + 1) * (n + 1));
  r.h.resize(r.target.size());
  for (int v = 0; v <= n; ++v)
    for (int u = 0; u <= n; ++u) {
      const auto i = static_cast<std::size_t>(v) * (n + 1) + u;
      r.target[i] = image(region.x0 + u, region.y0 + v);
      r.h[i] = eval_bilinear_unchecked(h, region.x0 + u, region.y0 + v);
    }
  const double step = static_cast<double>(n) / delta;
  for (int u = 0; u <= n; ++u) r.wx.push_back(axis_weight(u, step, delta));
  r.wy = r.wx;
  return r;
}

struct RegionFit {
  double rms = 0.0;
  ContractivityField field;
};

/// Collage error of predicting the region from the domain under the given
/// orientation: RMS over all region pixels (x', y') = L(x, y) of
/// I(x', y') - [d(x', y') (I(x, y) - g(x, y)) + h(x', y')].
inline RegionFit evaluate_pair(const PreparedRegion& region, const PreparedDomain& domain,
                               int orientation, double d_max) {
  const int n = region.rect.width();
  if (domain.lattice != n || region.rect.height() != n ||
      domain.rect.width() != domain.rect.height())
    throw ShapeMismatch("domain lattice does not match region " + to_string(region.rect));
  RegionFit fit;
  fit.field = field_from_grids(region.grid, domain.grid, orientation, d_max);
  const bool fx = flips_x(orientation);
  const bool fy = flips_y(orientation);
  double sum = 0.0;
  for (int v = 0; v <= n; ++v) {
    const int sv = fy ? n - v : v;
    const double* src = &domain.lattice_deviation[static_cast<std::size_t>(sv) * (n + 1)];
    const auto row = static_cast<std::size_t>(v) * (n + 1);
    for (int u = 0; u <= n; ++u) {
      const int su = fx ? n - u : u;
      const double d = eval_field_weights(fit.field, region.wx[u], region.wy[v]);
      const double e = d * src[su] + region.h[row + u] - region.target[row + u];
      sum += e * e;
    }
  }
  fit.rms = std::sqrt(sum / static_cast<double>((n + 1) * (n + 1)));
  return fit;
}

inline RegionFit region_error(const Image& image, const Region& region, const Domain& domain,
                              int orientation, const EncoderConfig& config) {
  const int n = region.rect.width();
  if (domain.rect.width() % n != 0) throw ShapeMismatch("domain side is not a multiple of the region side");
  const PreparedRegion r = prepare_region(image, region.rect, config.delta);
  const PreparedDomain d = prepare_domain(image, domain.rect, n, config.delta);
  return evaluate_pair(r, d, orientation, config.d_max);
}

struct MatchResult {
  RegionCode code;
  double rms = std::numeric_limits<double>::infinity();
  bool matched = false;  // false: NoMatch, code holds the best candidate anyway
};

/// Exhaustive scan over pool x orientations; ties go to the lowest domain id,
/// then the lowest orientation code.
inline MatchResult match_region(const PreparedRegion& region,
                                const std::vector<PreparedDomain>& pool, int depth,
                                const EncoderConfig& config) {
  if (pool.empty()) throw EmptyPool("empty domain pool");
  const int orientations = config.search_orientations ? kOrientationCount : 1;
  MatchResult best;
  for (std::size_t id = 0; id < pool.size(); ++id) {
    for (int o = 0; o < orientations; ++o) {
      RegionFit fit = evaluate_pair(region, pool[id], o, config.d_max);
      if (fit.rms < best.rms) {
        best.rms = fit.rms;
        best.code = RegionCode{region.rect, depth, static_cast<int>(id), o,
                               std::move(fit.field), fit.rms};
      }
    }
  }
  best.matched = best.rms <= config.tolerance;
  return best;
}

inline std::vector<PreparedDomain> prepare_pool(const Image& image, const CodecParams& p,
                                                int depth) {
  std::vector<PreparedDomain> pool;
  const long long n = p.pool_size(depth);
  pool.reserve(static_cast<std::size_t>(n));
  for (int id = 0; id < n; ++id)
    pool.push_back(prepare_domain(image, p.domain_rect(depth, id), p.cell_at(depth), p.delta));
  return pool;
}

inline MatchResult match_region(const Image& image, const Region& region,
                                const std::vector<Domain>& pool, const EncoderConfig& config) {
  std::vector<PreparedDomain> prepared;
  for (const Domain& d : pool)
    prepared.push_back(prepare_domain(image, d.rect, region.rect.width(), config.delta));
  return match_region(prepare_region(image, region.rect, config.delta), prepared, region.depth,
                      config);
}

namespace detail {

struct Subtree {
  std::vector<bool> bits;
  std::vector<RegionCode> codes;
};

inline void encode_node(const Image& image, const Rect& rect, int depth, int deepest,
                        const std::vector<std::vector<PreparedDomain>>& pools,
                        const EncoderConfig& config, Subtree& out) {
  MatchResult m = match_region(prepare_region(image, rect, config.delta), pools[depth], depth, config);
  if (m.matched || depth >= deepest) {
    out.bits.push_back(false);
    out.codes.push_back(std::move(m.code));
    return;
  }
  out.bits.push_back(true);
  for (const Region& child : split_region(Region{1, 1, depth, rect}, kMinRegionCell))
    encode_node(image, child.rect, depth + 1, deepest, pools, config, out);
}

}  // namespace detail

inline CompressedImage encode(const Image& image, const EncoderConfig& config) {
  const CodecParams p = params_for(config, image.width(), image.height());
  const int deepest = deepest_level(p, config);
  for (int t = 1; t <= deepest; ++t)
    if (p.pool_size(t) > kMaxPoolSize)
      throw ConfigError("domain pool at depth " + std::to_string(t) + " exceeds " +
                        std::to_string(kMaxPoolSize) + " entries; raise the stride");
  const unsigned threads = thread_count(config.threads);

  std::vector<std::vector<PreparedDomain>> pools(static_cast<std::size_t>(deepest) + 1);
  parallel_for(pools.size(), threads, [&](std::size_t t) {
    pools[t] = prepare_pool(image, p, static_cast<int>(t));
  });

  const Partition top = build_partition(p.width, p.height, p.region_cell);
  std::vector<detail::Subtree> trees(top.regions().size());
  parallel_for(trees.size(), threads, [&](std::size_t i) {
    detail::encode_node(image, top.regions()[i].rect, 0, deepest, pools, config, trees[i]);
  });

  CompressedImage out;
  out.params = p;
  for (auto& t : trees) {
    out.split_bits.insert(out.split_bits.end(), t.bits.begin(), t.bits.end());
    for (auto& c : t.codes) out.codes.push_back(std::move(c));
  }
  std::vector<Leaf> leaves;
  std::vector<int> ids;
  for (const auto& c : out.codes) {
    leaves.push_back({c.region, c.depth});
    ids.push_back(c.domain_id);
  }
  out.vertices = vertex_plane(p, leaves, ids, image);
  return out;
}

}  // namespace rifs
