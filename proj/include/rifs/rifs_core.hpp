#pragma once

// Maps w = (L, F) of a recurrent IFS over a rectangular grid, the metric that
// makes them contractive, the connection / transition matrices and orbit
// generation.
//
//   L(x, y)    = per-axis affine contraction of a domain rect onto a region
//   F(x, y, z) = d(L(x, y)) * (z - g(x, y)) + h(L(x, y))
//   rho(p, q)  = |x - x'| + |y - y'| + theta * |z - z'|

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rifs/bilinear.hpp"
#include "rifs/contractivity_field.hpp"
#include "rifs/error.hpp"
#include "rifs/grid_model.hpp"
#include "rifs/plane.hpp"

namespace rifs {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool operator==(const Point3&) const = default;
};

struct PlanarMap {
  Rect source;
  Rect target;
  bool flip_x = false;
  bool flip_y = false;
  double a_x = 0.0;
  double a_y = 0.0;

  // Offsets are scaled as (x - x0) * w_target / w_source so that integer
  // corners land exactly on integer corners.
  double map_x(double x) const noexcept {
    const double off = (x - source.x0) * target.width() / source.width();
    return flip_x ? target.x1 - off : target.x0 + off;
  }
  double map_y(double y) const noexcept {
    const double off = (y - source.y0) * target.height() / source.height();
    return flip_y ? target.y1 - off : target.y0 + off;
  }
  int orientation() const noexcept { return (flip_x ? kFlipX : 0) | (flip_y ? kFlipY : 0); }
};

inline PlanarMap make_planar_map(const Rect& domain, const Rect& region, bool flip_x,
                                 bool flip_y) {
  if (!domain.nonempty() || !region.nonempty())
    throw NotContractive("empty rect in planar map");
  PlanarMap m{domain, region, flip_x, flip_y,
              static_cast<double>(region.width()) / domain.width(),
              static_cast<double>(region.height()) / domain.height()};
  if (m.a_x >= 1.0 || m.a_y >= 1.0)
    throw NotContractive("region " + to_string(region) + " is not smaller than domain " +
                         to_string(domain) + " on every axis");
  return m;
}

inline PlanarMap make_planar_map(const Domain& domain, const Region& region, bool flip_x,
                                 bool flip_y) {
  return make_planar_map(domain.rect, region.rect, flip_x, flip_y);
}

/// One map w = (L, F).
struct RifsMap {
  PlanarMap planar;
  ContractivityField d;  // lives on planar.target
  BilinearPatch g;       // lives on planar.source
  BilinearPatch h;       // lives on planar.target
};

inline RifsMap make_rifs_map(const PlanarMap& planar, ContractivityField d, BilinearPatch g,
                             BilinearPatch h) {
  if (d.rect != planar.target || h.rect != planar.target || g.rect != planar.source)
    throw ShapeMismatch("field / patches do not match the planar map rects");
  return RifsMap{planar, std::move(d), std::move(g), std::move(h)};
}

/// F at a point of the domain, without the containment check.
inline double eval_f_unchecked(const RifsMap& m, double x, double y, double z) noexcept {
  const double xr = m.planar.map_x(x);
  const double yr = m.planar.map_y(y);
  return eval_field_unchecked(m.d, xr, yr) * (z - eval_bilinear_unchecked(m.g, x, y)) +
         eval_bilinear_unchecked(m.h, xr, yr);
}

inline Point3 eval_w(const RifsMap& m, double x, double y, double z) {
  const Rect& s = m.planar.source;
  if (x < s.x0 - kRectSlack || x > s.x1 + kRectSlack || y < s.y0 - kRectSlack ||
      y > s.y1 + kRectSlack)
    throw OutOfRect("(" + std::to_string(x) + ", " + std::to_string(y) + ") outside domain " +
                    to_string(s));
  return {m.planar.map_x(x), m.planar.map_y(y), eval_f_unchecked(m, x, y, z)};
}

inline Point3 eval_w(const RifsMap& m, const Point3& p) { return eval_w(m, p.x, p.y, p.z); }

inline double rho(const Point3& p, const Point3& q, double theta) {
  if (!(theta > 0.0)) throw RangeError("theta must be positive");
  return std::abs(p.x - q.x) + std::abs(p.y - q.y) + theta * std::abs(p.z - q.z);
}

struct MetricParams {
  double theta = 0.0;
  double a = 0.0;
  double s = 0.0;
  double lipschitz_f = 0.0;
};

/// a = (1 + max ratio) / 2, theta = (1 - max ratio) / (2 L_F), s = max(a, L_F).
inline MetricParams contractivity_params(std::span<const double> planar_ratios,
                                         double lipschitz_f) {
  if (planar_ratios.empty()) throw RangeError("no planar ratios");
  if (!(lipschitz_f > 0.0)) throw RangeError("L_F must be positive");
  double max_ratio = 0.0;
  for (double r : planar_ratios) {
    if (!(r > 0.0 && r < 1.0)) throw NotContractive("planar ratio outside (0, 1)");
    max_ratio = std::max(max_ratio, r);
  }
  MetricParams p;
  p.lipschitz_f = lipschitz_f;
  p.a = (1.0 + max_ratio) / 2.0;
  p.theta = (1.0 - max_ratio) / (2.0 * lipschitz_f);
  p.s = std::max(p.a, lipschitz_f);
  return p;
}

/// Sampled Lipschitz estimate of F: sup|d| plus the largest difference
/// quotient in (x, y) over a 9x9 probe grid of the domain, for z in {0, 255}.
inline double estimate_lipschitz(const RifsMap& m) {
  constexpr int kProbes = 9;
  const Rect& s = m.planar.source;
  const double hx = static_cast<double>(s.width()) / (kProbes - 1);
  const double hy = static_cast<double>(s.height()) / (kProbes - 1);
  double slope = 0.0;
  for (double z : {0.0, kMaxIntensity}) {
    for (int j = 0; j < kProbes; ++j) {
      for (int i = 0; i < kProbes; ++i) {
        const double x = s.x0 + i * hx;
        const double y = s.y0 + j * hy;
        const double f = eval_f_unchecked(m, x, y, z);
        if (i + 1 < kProbes)
          slope = std::max(slope, std::abs(eval_f_unchecked(m, x + hx, y, z) - f) / hx);
        if (j + 1 < kProbes)
          slope = std::max(slope, std::abs(eval_f_unchecked(m, x, y + hy, z) - f) / hy);
      }
    }
  }
  return m.d.sup_abs() + slope;
}

namespace detail {

/// Uniform double in [0, 1) from the top 53 bits; mt19937_64 is fully
/// specified, so this is reproducible across standard libraries.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Largest observed rho(w(p), w(q)) / rho(p, q) over random pairs in the
/// domain (z in [0, 255]). Half the pairs are near neighbours to probe local
/// slopes. Deterministic for a given seed.
inline double verify_contraction(const RifsMap& m, double theta, int trials,
                                 std::uint64_t seed = 1) {
  if (trials < 1) throw RangeError("trials must be >= 1");
  std::mt19937_64 rng(seed);
  const Rect& s = m.planar.source;
  auto random_point = [&] {
    return Point3{s.x0 + detail::unit_uniform(rng) * s.width(),
                  s.y0 + detail::unit_uniform(rng) * s.height(),
                  detail::unit_uniform(rng) * kMaxIntensity};
  };
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Point3 p = random_point();
    Point3 q = random_point();
    if (t % 2 == 1) {
      // neighbour within one pixel, clamped into the domain
      q.x = std::clamp(p.x + (q.x - p.x) / s.width(), double(s.x0), double(s.x1));
      q.y = std::clamp(p.y + (q.y - p.y) / s.height(), double(s.y0), double(s.y1));
      q.z = p.z + (q.z - p.z) / kMaxIntensity;
    }
    const double base = rho(p, q, theta);
    if (base == 0.0) continue;
    worst = std::max(worst, rho(eval_w(m, p), eval_w(m, q), theta) / base);
  }
  return worst;
}

template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  T& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const noexcept {
    return values_[r * cols_ + c];
  }
  std::span<const T> row(std::size_t r) const noexcept {
    return std::span<const T>(values_).subspan(r * cols_, cols_);
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> values_;
};

using ConnectionMatrix = Matrix<std::uint8_t>;
using StochasticMatrix = Matrix<double>;

template <class T>
Matrix<T> transpose(const Matrix<T>& m) {
  Matrix<T> t(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
  return t;
}

/// c(k, l) = 1 exactly when region l lies inside the domain of map k.
inline ConnectionMatrix build_connection_matrix(std::span<const Rect> regions,
                                                std::span<const Rect> map_domains) {
  if (regions.size() != map_domains.size())
    throw RangeError("every region needs exactly one assigned domain");
  const std::size_t n = regions.size();
  ConnectionMatrix c(n, n, 0);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l) c(k, l) = map_domains[k].contains(regions[l]) ? 1 : 0;
  return c;
}

/// Same, with `assignments[l]` naming the partition domain used by region l.
inline ConnectionMatrix build_connection_matrix(const Partition& partition,
                                                std::span<const int> assignments) {
  const auto& regions = partition.regions();
  if (assignments.size() != regions.size())
    throw RangeError("every region needs exactly one assigned domain");
  std::vector<Rect> region_rects;
  std::vector<Rect> domain_rects;
  for (std::size_t l = 0; l < regions.size(); ++l) {
    const int id = assignments[l];
    if (id < 0 || static_cast<std::size_t>(id) >= partition.domains().size())
      throw RangeError("assignment names unknown domain " + std::to_string(id));
    region_rects.push_back(regions[l].rect);
    domain_rects.push_back(partition.domains()[static_cast<std::size_t>(id)].rect);
  }
  return build_connection_matrix(region_rects, domain_rects);
}

/// p(k, l) = c(k, l) / (row sum of c).
inline StochasticMatrix stochastic_uniform(const ConnectionMatrix& c) {
  StochasticMatrix p(c.rows(), c.cols(), 0.0);
  for (std::size_t k = 0; k < c.rows(); ++k) {
    std::size_t count = 0;
    for (auto v : c.row(k)) count += v != 0;
    if (count == 0) throw EmptyRow("row " + std::to_string(k) + " of the connection matrix is zero");
    for (std::size_t l = 0; l < c.cols(); ++l)
      p(k, l) = c(k, l) != 0 ? 1.0 / static_cast<double>(count) : 0.0;
  }
  return p;
}

/// Strong connectivity of the directed graph k -> l for every positive entry.
template <class T>
bool is_irreducible(const Matrix<T>& p) {
  const std::size_t n = p.rows();
  if (n == 0 || p.cols() != n) return false;
  auto reaches_all = [&](bool reverse) {
    std::vector<char> seen(n, 0);
    std::queue<std::size_t> todo;
    seen[0] = 1;
    todo.push(0);
    std::size_t count = 1;
    while (!todo.empty()) {
      const std::size_t u = todo.front();
      todo.pop();
      for (std::size_t v = 0; v < n; ++v) {
        const T e = reverse ? p(v, u) : p(u, v);
        if (e > T{} && !seen[v]) {
          seen[v] = 1;
          ++count;
          todo.push(v);
        }
      }
    }
    return count == n;
  };
  return reaches_all(false) && reaches_all(true);
}

namespace detail {

inline std::vector<Rect> targets(std::span<const RifsMap> maps) {
  std::vector<Rect> r;
  for (const auto& m : maps) r.push_back(m.planar.target);
  return r;
}
inline std::vector<Rect> sources(std::span<const RifsMap> maps) {
  std::vector<Rect> r;
  for (const auto& m : maps) r.push_back(m.planar.source);
  return r;
}

}  // namespace detail

/// Connection matrix of a set of maps (region l inside domain of map k).
inline ConnectionMatrix connection_matrix(std::span<const RifsMap> maps) {
  const auto t = detail::targets(maps);
  const auto s = detail::sources(maps);
  return build_connection_matrix(t, s);
}

/// Transition matrix driving an orbit: from state k (the point lies in region
/// k) map l may be applied when region k lies inside the domain of map l,
/// i.e. the transposed connection matrix, normalized uniformly.
inline StochasticMatrix transition_matrix(std::span<const RifsMap> maps) {
  return stochastic_uniform(transpose(connection_matrix(maps)));
}

/// Orbit q_{i+1} = w_{k_{i+1}}(q_i) with k_{i+1} drawn from row k_i of `p`.
/// Returns the n - burn_in points after the burn-in. Throws InvalidTransition
/// when `p` allows a map whose domain does not contain the current region.
inline std::vector<Point3> chaos_game(std::span<const RifsMap> maps, const StochasticMatrix& p,
                                      Point3 q0, std::size_t n, std::size_t burn_in,
                                      std::uint64_t seed) {
  const std::size_t count = maps.size();
  if (count == 0) throw RangeError("chaos game needs at least one map");
  if (p.rows() != count || p.cols() != count)
    throw RangeError("transition matrix does not match the map count");
  std::vector<std::vector<double>> cumulative(count);
  for (std::size_t k = 0; k < count; ++k) {
    double acc = 0.0;
    for (double v : p.row(k)) {
      if (v < 0.0) throw InvalidTransition("negative transition probability");
      acc += v;
      cumulative[k].push_back(acc);
    }
    if (std::abs(acc - 1.0) > 1e-9)
      throw InvalidTransition("row " + std::to_string(k) + " does not sum to 1");
  }
  std::size_t state = count;
  for (std::size_t k = 0; k < count && state == count; ++k)
    if (maps[k].planar.target.contains(q0.x, q0.y)) state = k;
  if (state == count) throw OutOfRect("initial point lies in no region");

  std::mt19937_64 rng(seed);
  std::vector<Point3> cloud;
  cloud.reserve(n > burn_in ? n - burn_in : 0);
  Point3 q = q0;
  for (std::size_t i = 1; i <= n; ++i) {
    const auto& row = cumulative[state];
    const double u = detail::unit_uniform(rng) * row.back();
    auto it = std::upper_bound(row.begin(), row.end(), u);
    std::size_t next = static_cast<std::size_t>(it - row.begin());
    if (next >= count) next = count - 1;
    while (p(state, next) <= 0.0 && next > 0) --next;  // u landed on a flat step
    if (!maps[next].planar.source.contains(maps[state].planar.target))
      throw InvalidTransition("map " + std::to_string(next) + " cannot follow state " +
                              std::to_string(state));
    q = eval_w(maps[next], q);
    state = next;
    if (i > burn_in) cloud.push_back(q);
  }
  return cloud;
}

/// Orbit for rendering arbitrary codes: at each step a map is chosen
/// uniformly among those whose domain contains the current point. When no
/// domain contains it, the orbit restarts from a random earlier orbit point.
inline std::vector<Point3> chaos_game_local(std::span<const RifsMap> maps, Point3 q0,
                                            std::size_t n, std::size_t burn_in,
                                            std::uint64_t seed) {
  if (maps.empty()) throw RangeError("chaos game needs at least one map");
  // Bucket maps by the coarse cells their domains touch.
  constexpr int kBucket = 8;
  int max_x = 0;
  int max_y = 0;
  for (const auto& m : maps) {
    max_x = std::max(max_x, m.planar.source.x1);
    max_y = std::max(max_y, m.planar.source.y1);
  }
  const int bw = max_x / kBucket + 1;
  const int bh = max_y / kBucket + 1;
  std::vector<std::vector<std::uint32_t>> buckets(static_cast<std::size_t>(bw) *
                                                  static_cast<std::size_t>(bh));
  for (std::size_t k = 0; k < maps.size(); ++k) {
    const Rect& s = maps[k].planar.source;
    for (int by = std::max(0, s.y0) / kBucket; by <= s.y1 / kBucket; ++by)
      for (int bx = std::max(0, s.x0) / kBucket; bx <= s.x1 / kBucket; ++bx)
        buckets[static_cast<std::size_t>(by) * bw + bx].push_back(static_cast<std::uint32_t>(k));
  }
  std::mt19937_64 rng(seed);
  std::vector<Point3> history;
  history.reserve(n);
  std::vector<std::uint32_t> candidates;
  Point3 q = q0;
  for (std::size_t i = 1; i <= n; ++i) {
    candidates.clear();
    const int bx = static_cast<int>(std::floor(q.x)) / kBucket;
    const int by = static_cast<int>(std::floor(q.y)) / kBucket;
    if (q.x >= 0 && q.y >= 0 && bx < bw && by < bh)
      for (auto k : buckets[static_cast<std::size_t>(by) * bw + bx])
        if (maps[k].planar.source.contains(q.x, q.y)) candidates.push_back(k);
    if (candidates.empty()) {
      if (history.empty()) break;
      q = history[static_cast<std::size_t>(detail::unit_uniform(rng) * history.size())];
      --i;
      continue;
    }
    const auto pick = candidates[static_cast<std::size_t>(detail::unit_uniform(rng) *
                                                          candidates.size())];
    q = eval_w(maps[pick], q);
    history.push_back(q);
  }
  if (history.size() <= burn_in) return {};
  return {history.begin() + static_cast<std::ptrdiff_t>(burn_in), history.end()};
}

/// Orbit cloud rasterized by averaging z over points rounding to each pixel.
struct Raster {
  Image mean;
  Plane<std::uint8_t> covered;
};

inline Raster rasterize(std::span<const Point3> cloud, int width, int height) {
  Image sum(width, height, 0.0);
  Plane<std::uint32_t> hits(width, height, 0);
  for (const auto& p : cloud) {
    const int x = static_cast<int>(std::lround(p.x));
    const int y = static_cast<int>(std::lround(p.y));
    if (!sum.inside(x, y)) continue;
    sum(x, y) += p.z;
    ++hits(x, y);
  }
  Raster r{Image(width, height, 0.0), Plane<std::uint8_t>(width, height, 0)};
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      if (hits(x, y) > 0) {
        r.mean(x, y) = sum(x, y) / hits(x, y);
        r.covered(x, y) = 1;
      }
  return r;
}

}  // namespace rifs
