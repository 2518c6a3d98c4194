#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rifs {

/// Dense 2-D array addressed as (x, y), stored row-major.
template <class T>
class Plane {
 public:
  Plane() = default;
  Plane(int width, int height, T fill = T{})
      : width_(width), height_(height),
        values_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  T& operator()(int x, int y) noexcept { return values_[index(x, y)]; }
  const T& operator()(int x, int y) const noexcept { return values_[index(x, y)]; }

  bool inside(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }

  bool operator==(const Plane&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> values_;
};

/// Working intensity field. Kept in floating point so that decoding is a
/// contraction on an unbounded space; clamping happens only on output.
using Image = Plane<double>;

/// 8-bit grayscale raster as read from / written to disk.
using Gray8 = Plane<std::uint8_t>;

template <class T>
Image to_image(const Plane<T>& src) {
  Image out(src.width(), src.height());
  auto dst = out.values();
  auto in = src.values();
  for (std::size_t i = 0; i < in.size(); ++i) dst[i] = static_cast<double>(in[i]);
  return out;
}

/// Rounds to nearest and clamps to [0, 255].
inline std::uint8_t to_byte(double v) noexcept {
  if (!(v > 0.0)) return 0;  // also catches NaN
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(v + 0.5);
}

inline Gray8 to_gray8(const Image& src) {
  Gray8 out(src.width(), src.height());
  auto dst = out.values();
  auto in = src.values();
  for (std::size_t i = 0; i < in.size(); ++i) dst[i] = to_byte(in[i]);
  return out;
}

}  // namespace rifs
