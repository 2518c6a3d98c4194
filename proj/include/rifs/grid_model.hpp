#pragma once

// Rectangular grid, regions, domains and the quadtree partition built on top
// of them. All coordinates are integer pixel positions; a rect [x0, x1] x
// [y0, y1] is closed, so neighbouring rects share their common edge.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "rifs/error.hpp"
#include "rifs/plane.hpp"

namespace rifs {

inline constexpr int kMinRegionCell = 4;
inline constexpr double kMaxIntensity = 255.0;

struct Rect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const noexcept { return x1 - x0; }
  int height() const noexcept { return y1 - y0; }
  long long area() const noexcept {
    return static_cast<long long>(width()) * static_cast<long long>(height());
  }
  bool nonempty() const noexcept { return x1 > x0 && y1 > y0; }

  bool contains(const Rect& o) const noexcept {
    return o.x0 >= x0 && o.x1 <= x1 && o.y0 >= y0 && o.y1 <= y1;
  }
  bool contains(double x, double y) const noexcept {
    return x >= x0 && x <= x1 && y >= y0 && y <= y1;
  }
  /// Interiors intersect.
  bool overlaps(const Rect& o) const noexcept {
    return x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1;
  }

  bool operator==(const Rect&) const = default;
};

inline std::string to_string(const Rect& r) {
  return "[" + std::to_string(r.x0) + "," + std::to_string(r.x1) + "]x[" +
         std::to_string(r.y0) + "," + std::to_string(r.y1) + "]";
}

/// Grid coordinates and the data values z(i, j) attached to them.
struct GridDataSet {
  std::vector<int> xs;
  std::vector<int> ys;
  std::vector<double> z;  // xs.size() x ys.size(), index i * ys.size() + j

  double at(std::size_t i, std::size_t j) const { return z[i * ys.size() + j]; }
  double& at(std::size_t i, std::size_t j) { return z[i * ys.size() + j]; }

  /// Throws RangeError when an invariant is broken.
  void validate() const {
    auto increasing = [](const std::vector<int>& v) {
      return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end();
    };
    if (!increasing(xs) || !increasing(ys))
      throw RangeError("grid coordinates must be strictly increasing");
    if (z.size() != xs.size() * ys.size())
      throw RangeError("grid value matrix does not match coordinate counts");
    for (double v : z)
      if (!std::isfinite(v) || v < 0.0 || v > kMaxIntensity)
        throw RangeError("grid value outside [0, 255]");
  }
};

struct Region {
  int ix = 1;  // 1-based column in the uniform grid at this depth
  int iy = 1;  // 1-based row
  int depth = 0;
  Rect rect;

  bool operator==(const Region&) const = default;
};

struct Domain {
  int id = 0;
  Rect rect;
  /// Grid indices (s, t) of the corners (x0,y0), (x1,y0), (x0,y1), (x1,y1).
  std::array<std::pair<int, int>, 4> corner_grid_indices{};
};

// Row-major enumeration of an m x n grid: k = (j - 1) * m + i.
inline int tau(int i, int j, int m, int n = std::numeric_limits<int>::max()) {
  if (m < 1 || i < 1 || i > m || j < 1 || j > n)
    throw RangeError("tau: index (" + std::to_string(i) + ", " + std::to_string(j) +
                     ") outside grid of width " + std::to_string(m));
  return (j - 1) * m + i;
}

inline std::pair<int, int> tau_inv(int k, int m) {
  if (m < 1 || k < 1) throw RangeError("tau_inv: k must be >= 1");
  return {(k - 1) % m + 1, (k - 1) / m + 1};
}

/// Splits into four equal quadrants ordered top-left, top-right,
/// bottom-left, bottom-right.
inline std::array<Region, 4> split_region(const Region& r, int min_cell = kMinRegionCell) {
  const int w = r.rect.width();
  const int h = r.rect.height();
  if (w % 2 != 0 || h % 2 != 0 || w / 2 < min_cell || h / 2 < min_cell)
    throw MinSizeError("cannot split " + to_string(r.rect) + " below " +
                       std::to_string(min_cell) + " pixels");
  const int mx = r.rect.x0 + w / 2;
  const int my = r.rect.y0 + h / 2;
  const int d = r.depth + 1;
  const int ix = 2 * (r.ix - 1) + 1;
  const int iy = 2 * (r.iy - 1) + 1;
  return {Region{ix, iy, d, {r.rect.x0, r.rect.y0, mx, my}},
          Region{ix + 1, iy, d, {mx, r.rect.y0, r.rect.x1, my}},
          Region{ix, iy + 1, d, {r.rect.x0, my, mx, r.rect.y1}},
          Region{ix + 1, iy + 1, d, {mx, my, r.rect.x1, r.rect.y1}}};
}

class Partition {
 public:
  Partition() = default;

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int cell() const noexcept { return cell_; }
  int columns() const noexcept { return columns_; }
  int rows() const noexcept { return rows_; }

  const std::vector<int>& xs() const noexcept { return xs_; }
  const std::vector<int>& ys() const noexcept { return ys_; }
  const std::vector<Region>& regions() const noexcept { return regions_; }
  const std::vector<Domain>& domains() const noexcept { return domains_; }

  Rect bounds() const noexcept { return {0, 0, width_ - 1, height_ - 1}; }

  /// gamma_x / gamma_y: grid index of a registered coordinate.
  int gamma_x(int x) const { return lookup(xs_, x, "x"); }
  int gamma_y(int y) const { return lookup(ys_, y, "y"); }

  /// sigma: the (s, t) index pair of a registered grid point.
  std::pair<int, int> sigma(int x, int y) const { return {gamma_x(x), gamma_y(y)}; }

  void register_x(int x) { insert_sorted(xs_, x); }
  void register_y(int y) { insert_sorted(ys_, y); }

  /// Replaces region `index` by its four quadrants (in place, pre-order) and
  /// registers the new midpoint coordinates.
  std::array<Region, 4> split(std::size_t index, int min_cell = kMinRegionCell) {
    if (index >= regions_.size()) throw RangeError("split: no region " + std::to_string(index));
    const auto children = split_region(regions_[index], min_cell);
    register_x(children[0].rect.x1);
    register_y(children[0].rect.y1);
    regions_.erase(regions_.begin() + static_cast<std::ptrdiff_t>(index));
    regions_.insert(regions_.begin() + static_cast<std::ptrdiff_t>(index), children.begin(),
                    children.end());
    refresh_domain_indices();
    return children;
  }

  /// Adds a domain; its corners become grid points.
  const Domain& add_domain(const Rect& rect) {
    add_domains(std::vector<Rect>{rect});
    return domains_.back();
  }

  void add_domains(const std::vector<Rect>& rects) {
    for (const Rect& rect : rects) {
      if (!bounds().contains(rect) || !rect.nonempty())
        throw RangeError("domain " + to_string(rect) + " leaves the image");
      register_x(rect.x0);
      register_x(rect.x1);
      register_y(rect.y0);
      register_y(rect.y1);
      Domain d;
      d.id = static_cast<int>(domains_.size());
      d.rect = rect;
      domains_.push_back(d);
    }
    refresh_domain_indices();
  }

  /// Grid data anchored on the image: z(i, j) = image(xs[i], ys[j]).
  GridDataSet grid_data(const Image& image) const {
    GridDataSet g{xs_, ys_, {}};
    g.z.reserve(xs_.size() * ys_.size());
    for (int x : xs_)
      for (int y : ys_) g.z.push_back(image(x, y));
    return g;
  }

  /// True when the regions cover the image rectangle without overlap.
  bool tiles() const {
    long long total = 0;
    for (std::size_t a = 0; a < regions_.size(); ++a) {
      const Rect& r = regions_[a].rect;
      if (!r.nonempty() || !bounds().contains(r)) return false;
      total += r.area();
      for (std::size_t b = a + 1; b < regions_.size(); ++b)
        if (r.overlaps(regions_[b].rect)) return false;
    }
    return total == bounds().area();
  }

  friend Partition build_partition(int width, int height, int cell);

 private:
  // Registering a coordinate shifts the indices of everything after it.
  void refresh_domain_indices() {
    for (Domain& d : domains_) {
      const Rect& r = d.rect;
      d.corner_grid_indices = {sigma(r.x0, r.y0), sigma(r.x1, r.y0), sigma(r.x0, r.y1),
                               sigma(r.x1, r.y1)};
    }
  }

  static int lookup(const std::vector<int>& v, int c, const char* axis) {
    auto it = std::lower_bound(v.begin(), v.end(), c);
    if (it == v.end() || *it != c)
      throw RangeError(std::string("coordinate ") + axis + "=" + std::to_string(c) +
                       " is not a grid point");
    return static_cast<int>(it - v.begin());
  }
  static void insert_sorted(std::vector<int>& v, int c) {
    auto it = std::lower_bound(v.begin(), v.end(), c);
    if (it == v.end() || *it != c) v.insert(it, c);
  }

  int width_ = 0;
  int height_ = 0;
  int cell_ = 0;
  int columns_ = 0;
  int rows_ = 0;
  std::vector<int> xs_;
  std::vector<int> ys_;
  std::vector<Region> regions_;
  std::vector<Domain> domains_;
};

/// Uniform grid of cell x cell regions over a width x height image, enumerated
/// row-major (the region at list position k - 1 has tau(ix, iy) = k).
inline Partition build_partition(int width, int height, int cell) {
  if (cell < 2) throw DivisibilityError("cell must be at least 2 pixels");
  if (width < 2 || height < 2) throw DivisibilityError("image must be at least 2x2 pixels");
  if ((width - 1) % cell != 0 || (height - 1) % cell != 0)
    throw DivisibilityError("image sides minus one (" + std::to_string(width - 1) + ", " +
                            std::to_string(height - 1) + ") must be divisible by cell " +
                            std::to_string(cell));
  Partition p;
  p.width_ = width;
  p.height_ = height;
  p.cell_ = cell;
  p.columns_ = (width - 1) / cell;
  p.rows_ = (height - 1) / cell;
  for (int i = 0; i <= p.columns_; ++i) p.xs_.push_back(i * cell);
  for (int j = 0; j <= p.rows_; ++j) p.ys_.push_back(j * cell);
  p.regions_.reserve(static_cast<std::size_t>(p.columns_) * static_cast<std::size_t>(p.rows_));
  for (int j = 1; j <= p.rows_; ++j)
    for (int i = 1; i <= p.columns_; ++i)
      p.regions_.push_back(Region{i, j, 0, {(i - 1) * cell, (j - 1) * cell, i * cell, j * cell}});
  return p;
}

}  // namespace rifs
