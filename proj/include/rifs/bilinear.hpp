#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "rifs/error.hpp"
#include "rifs/grid_model.hpp"

namespace rifs {

/// Blend of four values at the unit-square corners (0,0), (1,0), (0,1), (1,1).
/// The a*(1-t) + b*t form returns corner values bit-exactly.
inline double bilerp(double c00, double c10, double c01, double c11, double tx,
                     double ty) noexcept {
  const double top = c00 * (1.0 - tx) + c10 * tx;
  const double bottom = c01 * (1.0 - tx) + c11 * tx;
  return top * (1.0 - ty) + bottom * ty;
}

/// Bilinear surface through four corner values of a rect. This is the
/// interpolant used for both the domain patch g and the region patch h.
struct BilinearPatch {
  Rect rect;
  /// Values at (x0,y0), (x1,y0), (x0,y1), (x1,y1).
  std::array<double, 4> corner_values{};

  /// Slope bound s with |p(a) - p(b)| <= s * (|dx| + |dy|).
  double lipschitz() const noexcept {
    const auto& c = corner_values;
    const double sx = std::max(std::abs(c[1] - c[0]), std::abs(c[3] - c[2])) / rect.width();
    const double sy = std::max(std::abs(c[2] - c[0]), std::abs(c[3] - c[1])) / rect.height();
    return std::max(sx, sy);
  }
};

inline BilinearPatch patch_from_image(const Image& image, const Rect& r) {
  return {r, {image(r.x0, r.y0), image(r.x1, r.y0), image(r.x0, r.y1), image(r.x1, r.y1)}};
}

inline constexpr double kRectSlack = 1e-9;

/// Evaluation without the containment check, for hot loops.
inline double eval_bilinear_unchecked(const BilinearPatch& p, double x, double y) noexcept {
  const double tx = (x - p.rect.x0) / p.rect.width();
  const double ty = (y - p.rect.y0) / p.rect.height();
  const auto& c = p.corner_values;
  return bilerp(c[0], c[1], c[2], c[3], tx, ty);
}

inline double eval_bilinear(const BilinearPatch& p, double x, double y) {
  const Rect& r = p.rect;
  if (x < r.x0 - kRectSlack || x > r.x1 + kRectSlack || y < r.y0 - kRectSlack ||
      y > r.y1 + kRectSlack)
    throw OutOfRect("(" + std::to_string(x) + ", " + std::to_string(y) + ") outside " +
                    to_string(r));
  return eval_bilinear_unchecked(p, x, y);
}

}  // namespace rifs
