#pragma once

// Vertical contraction factor as a function over a region.
//
// Deviations are measured against the bilinear reference surface B through
// the four corner values of a rect; B coincides with the straight lines
// through the endpoints along all four edges. The ratio of region deviation
// to domain deviation at matching sample points gives the field samples,
// which are then interpolated bilinearly.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "rifs/bilinear.hpp"
#include "rifs/error.hpp"
#include "rifs/grid_model.hpp"
#include "rifs/plane.hpp"

namespace rifs {

/// Orientation bits of a planar map: bit 0 mirrors x, bit 1 mirrors y.
inline constexpr int kFlipX = 1;
inline constexpr int kFlipY = 2;
inline constexpr int kOrientationCount = 4;

inline bool flips_x(int orientation) noexcept { return (orientation & kFlipX) != 0; }
inline bool flips_y(int orientation) noexcept { return (orientation & kFlipY) != 0; }

struct DistanceGrid {
  Rect rect;
  int delta_x = 0;
  int delta_y = 0;
  double step_x = 0.0;
  double step_y = 0.0;
  std::vector<double> samples;     // |I - B|
  std::vector<double> deviations;  // I - B, same layout

  std::size_t index(int k, int l) const noexcept {
    return static_cast<std::size_t>(l) * static_cast<std::size_t>(delta_x + 1) +
           static_cast<std::size_t>(k);
  }
  double at(int k, int l) const noexcept { return samples[index(k, l)]; }
  bool is_corner(int k, int l) const noexcept {
    return (k == 0 || k == delta_x) && (l == 0 || l == delta_y);
  }
  /// Pixel position of sample (k, l).
  int sample_x(int k) const noexcept { return rect.x0 + k * (rect.width() / delta_x); }
  int sample_y(int l) const noexcept { return rect.y0 + l * (rect.height() / delta_y); }
};

struct ContractivityField {
  Rect rect;
  int delta_x = 0;
  int delta_y = 0;
  double d_max = 0.0;
  std::vector<double> ratios;  // (delta_x + 1) x (delta_y + 1), row l, column k

  std::size_t index(int k, int l) const noexcept {
    return static_cast<std::size_t>(l) * static_cast<std::size_t>(delta_x + 1) +
           static_cast<std::size_t>(k);
  }
  double at(int k, int l) const noexcept { return ratios[index(k, l)]; }

  double sup_abs() const noexcept {
    double m = 0.0;
    for (double r : ratios) m = std::max(m, std::abs(r));
    return m;
  }

  bool operator==(const ContractivityField&) const = default;
};

namespace detail {

inline void check_sampling(const Image& image, const Rect& rect, int delta_x, int delta_y) {
  if (delta_x < 2 || delta_y < 2)
    throw SamplingError("sample counts must be at least 2, got " + std::to_string(delta_x) +
                        "x" + std::to_string(delta_y));
  if (!rect.nonempty() || rect.x0 < 0 || rect.y0 < 0 || rect.x1 >= image.width() ||
      rect.y1 >= image.height())
    throw SamplingError("rect " + to_string(rect) + " is not inside the image");
  if (rect.width() % delta_x != 0 || rect.height() % delta_y != 0)
    throw SamplingError("sample counts " + std::to_string(delta_x) + "x" +
                        std::to_string(delta_y) + " do not divide rect " + to_string(rect));
}

inline double sign_of(double v) noexcept { return v < 0.0 ? -1.0 : 1.0; }

}  // namespace detail

/// Absolute vertical distances |I - B| on a (delta_x+1) x (delta_y+1) lattice
/// of the rect. Corner entries are 0 because B interpolates the corners.
inline DistanceGrid distance_grid(const Image& image, const Rect& rect, int delta_x,
                                  int delta_y) {
  detail::check_sampling(image, rect, delta_x, delta_y);
  DistanceGrid g;
  g.rect = rect;
  g.delta_x = delta_x;
  g.delta_y = delta_y;
  g.step_x = static_cast<double>(rect.width()) / delta_x;
  g.step_y = static_cast<double>(rect.height()) / delta_y;
  const auto n = static_cast<std::size_t>(delta_x + 1) * static_cast<std::size_t>(delta_y + 1);
  g.samples.resize(n);
  g.deviations.resize(n);
  const BilinearPatch reference = patch_from_image(image, rect);
  for (int l = 0; l <= delta_y; ++l) {
    for (int k = 0; k <= delta_x; ++k) {
      const int x = g.sample_x(k);
      const int y = g.sample_y(l);
      const double dev = image(x, y) - eval_bilinear_unchecked(reference, x, y);
      g.deviations[g.index(k, l)] = dev;
      g.samples[g.index(k, l)] = std::abs(dev);
    }
  }
  return g;
}

/// Recomputes a vanishing domain deviation one and then two pixels closer to
/// the rect centre. Returns the first nonzero signed deviation found (its
/// magnitude is the distance), or 0 when both shifts also vanish. Corner
/// samples are never resampled.
inline double resample_on_zero(const Image& image, const Rect& rect, int k, int l, int delta_x,
                               int delta_y) {
  detail::check_sampling(image, rect, delta_x, delta_y);
  const bool corner = (k == 0 || k == delta_x) && (l == 0 || l == delta_y);
  if (corner) return 0.0;
  const int x = rect.x0 + k * (rect.width() / delta_x);
  const int y = rect.y0 + l * (rect.height() / delta_y);
  const int twice_cx = rect.x0 + rect.x1;
  const int twice_cy = rect.y0 + rect.y1;
  const int dir_x = 2 * x < twice_cx ? 1 : (2 * x > twice_cx ? -1 : 0);
  const int dir_y = 2 * y < twice_cy ? 1 : (2 * y > twice_cy ? -1 : 0);
  if (dir_x == 0 && dir_y == 0) return 0.0;
  const BilinearPatch reference = patch_from_image(image, rect);
  for (int shift = 1; shift <= 2; ++shift) {
    const int px = x + shift * dir_x;
    const int py = y + shift * dir_y;
    if (!rect.contains(px, py)) break;
    const double dev = image(px, py) - eval_bilinear_unchecked(reference, px, py);
    if (dev != 0.0) return dev;
  }
  return 0.0;
}

/// Fills zero interior entries of a domain grid via resample_on_zero.
inline void resample_zero_entries(const Image& image, DistanceGrid& grid) {
  for (int l = 0; l <= grid.delta_y; ++l) {
    for (int k = 0; k <= grid.delta_x; ++k) {
      const auto i = grid.index(k, l);
      if (grid.is_corner(k, l) || grid.samples[i] != 0.0) continue;
      const double dev = resample_on_zero(image, grid.rect, k, l, grid.delta_x, grid.delta_y);
      grid.deviations[i] = dev;
      grid.samples[i] = std::abs(dev);
    }
  }
}

/// Re-indexes a domain grid so that entry (k, l) is the sample that the
/// planar map with the given orientation sends onto region sample (k, l).
inline DistanceGrid oriented(const DistanceGrid& g, int orientation) {
  if (orientation == 0) return g;
  DistanceGrid out = g;
  for (int l = 0; l <= g.delta_y; ++l) {
    for (int k = 0; k <= g.delta_x; ++k) {
      const int sk = flips_x(orientation) ? g.delta_x - k : k;
      const int sl = flips_y(orientation) ? g.delta_y - l : l;
      out.samples[out.index(k, l)] = g.samples[g.index(sk, sl)];
      out.deviations[out.index(k, l)] = g.deviations[g.index(sk, sl)];
    }
  }
  return out;
}

/// Elementwise signed ratio Hr / Hd. Corners are forced to 0, entries with a
/// zero denominator become 0 and magnitudes are clamped to d_max.
inline ContractivityField ratio_field(const DistanceGrid& hr, const DistanceGrid& hd,
                                      double d_max, std::span<const double> sign_grid) {
  if (hr.delta_x != hd.delta_x || hr.delta_y != hd.delta_y ||
      hr.samples.size() != hd.samples.size() || sign_grid.size() != hr.samples.size())
    throw ShapeMismatch("region grid " + std::to_string(hr.delta_x + 1) + "x" +
                        std::to_string(hr.delta_y + 1) + " vs domain grid " +
                        std::to_string(hd.delta_x + 1) + "x" + std::to_string(hd.delta_y + 1));
  if (!(d_max > 0.0 && d_max < 1.0)) throw RangeError("d_max must lie in (0, 1)");
  ContractivityField f;
  f.rect = hr.rect;
  f.delta_x = hr.delta_x;
  f.delta_y = hr.delta_y;
  f.d_max = d_max;
  f.ratios.assign(hr.samples.size(), 0.0);
  for (int l = 0; l <= hr.delta_y; ++l) {
    for (int k = 0; k <= hr.delta_x; ++k) {
      const auto i = hr.index(k, l);
      if (hr.is_corner(k, l) || hd.samples[i] == 0.0) continue;
      const double r = sign_grid[i] * hr.samples[i] / hd.samples[i];
      f.ratios[i] = std::clamp(r, -d_max, d_max);
    }
  }
  return f;
}

/// sign(region deviation) * sign(domain deviation), with sign(0) = +1.
inline std::vector<double> sign_grid(const DistanceGrid& hr, const DistanceGrid& hd_aligned) {
  std::vector<double> s(hr.deviations.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    s[i] = detail::sign_of(hr.deviations[i]) * detail::sign_of(hd_aligned.deviations[i]);
  return s;
}

/// Field for a region fed by a domain under the given orientation.
/// `domain_grid` must already have had its zero entries resampled.
inline ContractivityField field_from_grids(const DistanceGrid& region_grid,
                                           const DistanceGrid& domain_grid, int orientation,
                                           double d_max) {
  const DistanceGrid aligned = oriented(domain_grid, orientation);
  const auto signs = sign_grid(region_grid, aligned);
  return ratio_field(region_grid, aligned, d_max, signs);
}

/// Complete estimate of d(x, y) on `region` from image data on `region` and
/// `domain`.
inline ContractivityField estimate_field(const Image& image, const Rect& region,
                                         const Rect& domain, int orientation, double d_max,
                                         int delta_x, int delta_y) {
  const DistanceGrid hr = distance_grid(image, region, delta_x, delta_y);
  DistanceGrid hd = distance_grid(image, domain, delta_x, delta_y);
  resample_zero_entries(image, hd);
  return field_from_grids(hr, hd, orientation, d_max);
}

/// Cell index and fractional offset of a coordinate along one field axis.
struct AxisWeight {
  int cell = 0;
  double t = 0.0;
};

inline AxisWeight axis_weight(double offset, double step, int delta) noexcept {
  const double u = offset / step;
  int cell = static_cast<int>(std::floor(u));
  cell = std::clamp(cell, 0, delta - 1);
  return {cell, u - cell};
}

inline double eval_field_weights(const ContractivityField& f, AxisWeight wx,
                                 AxisWeight wy) noexcept {
  return bilerp(f.at(wx.cell, wy.cell), f.at(wx.cell + 1, wy.cell), f.at(wx.cell, wy.cell + 1),
                f.at(wx.cell + 1, wy.cell + 1), wx.t, wy.t);
}

inline double eval_field_unchecked(const ContractivityField& f, double x, double y) noexcept {
  const double step_x = static_cast<double>(f.rect.width()) / f.delta_x;
  const double step_y = static_cast<double>(f.rect.height()) / f.delta_y;
  return eval_field_weights(f, axis_weight(x - f.rect.x0, step_x, f.delta_x),
                            axis_weight(y - f.rect.y0, step_y, f.delta_y));
}

/// d(x, y): bilinear interpolation of the ratio samples.
inline double eval_field(const ContractivityField& f, double x, double y) {
  const Rect& r = f.rect;
  if (x < r.x0 - kRectSlack || x > r.x1 + kRectSlack || y < r.y0 - kRectSlack ||
      y > r.y1 + kRectSlack)
    throw OutOfRect("(" + std::to_string(x) + ", " + std::to_string(y) + ") outside field " +
                    to_string(r));
  return eval_field_unchecked(f, x, y);
}

/// Field that is identically zero (d = 0 kills all z-dependence).
inline ContractivityField zero_field(const Rect& rect, int delta_x, int delta_y, double d_max) {
  ContractivityField f;
  f.rect = rect;
  f.delta_x = delta_x;
  f.delta_y = delta_y;
  f.d_max = d_max;
  f.ratios.assign(static_cast<std::size_t>(delta_x + 1) * static_cast<std::size_t>(delta_y + 1),
                  0.0);
  return f;
}

}  // namespace rifs
