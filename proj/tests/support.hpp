#pragma once

// Generators and independent oracles shared by the unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "rifs/rifs.hpp"

namespace rifs::testing {

inline std::string data_path(const std::string& name) {
  return std::string(RIFS_TEST_DATA) + "/" + name;
}

/// Smooth random surface plus mild noise, clamped to [0, 255].
inline Image random_image(int w, int h, std::uint64_t seed, double noise = 6.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double fx = 1.0 + 4.0 * u(rng);
  const double fy = 1.0 + 4.0 * u(rng);
  const double px = 6.28 * u(rng);
  const double py = 6.28 * u(rng);
  const double base = 60.0 + 120.0 * u(rng);
  const double amp = 20.0 + 50.0 * u(rng);
  const double tilt = 40.0 * (u(rng) - 0.5);
  std::normal_distribution<double> n(0.0, noise);
  Image img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double v = base + amp * std::sin(fx * x / w * 6.28 + px) * std::cos(fy * y / h * 6.28 + py) +
                       tilt * (x - y) / w + n(rng);
      img(x, y) = std::round(std::clamp(v, 0.0, 255.0));
    }
  return img;
}

inline Image random_texture(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 255.0);
  Image img(w, h);
  for (double& v : img.values()) v = std::round(u(rng));
  return img;
}

/// Random field with zero corners and other samples in [-bound, bound].
/// With `zero_boundary` every sample on the rect edge is 0, so neighbouring
/// maps agree along shared edges and the attractor is continuous.
inline ContractivityField random_field(const Rect& rect, int delta, double bound, double d_max,
                                       std::mt19937_64& rng, bool zero_boundary = false) {
  std::uniform_real_distribution<double> u(-bound, bound);
  ContractivityField f = zero_field(rect, delta, delta, d_max);
  for (int l = 0; l <= delta; ++l)
    for (int k = 0; k <= delta; ++k) {
      const bool edge_x = k == 0 || k == delta;
      const bool edge_y = l == 0 || l == delta;
      const bool zero = zero_boundary ? (edge_x || edge_y) : (edge_x && edge_y);
      f.ratios[f.index(k, l)] = zero ? 0.0 : u(rng);
    }
  return f;
}

/// A valid code with only top-level leaves, random domains, orientations,
/// fields and vertex values. Fields are already quantized.
inline CompressedImage synthetic_code(const CodecParams& p, std::uint64_t seed,
                                      double field_bound = 0.6, bool split_some = false,
                                      bool zero_boundary = false) {
  std::mt19937_64 rng(seed);
  CompressedImage code;
  code.params = p;
  std::uniform_int_distribution<int> orient(0, kOrientationCount - 1);
  std::uniform_int_distribution<int> coin(0, 3);
  std::vector<Leaf> leaves;
  const int c = p.region_cell;
  for (int j = 0; j < p.top_rows(); ++j)
    for (int i = 0; i < p.top_columns(); ++i) {
      const Rect r{i * c, j * c, (i + 1) * c, (j + 1) * c};
      if (split_some && c / 2 >= p.min_cell() && coin(rng) == 0) {
        code.split_bits.push_back(true);
        const int h = c / 2;
        for (const Rect& q : {Rect{r.x0, r.y0, r.x0 + h, r.y0 + h}, Rect{r.x0 + h, r.y0, r.x1, r.y0 + h},
                              Rect{r.x0, r.y0 + h, r.x0 + h, r.y1}, Rect{r.x0 + h, r.y0 + h, r.x1, r.y1}}) {
          code.split_bits.push_back(false);
          leaves.push_back({q, 1});
        }
      } else {
        code.split_bits.push_back(false);
        leaves.push_back({r, 0});
      }
    }
  std::vector<int> ids;
  for (const Leaf& leaf : leaves) {
    RegionCode rc;
    rc.region = leaf.rect;
    rc.depth = leaf.depth;
    std::uniform_int_distribution<int> dom(0, static_cast<int>(p.pool_size(leaf.depth)) - 1);
    rc.domain_id = dom(rng);
    rc.orientation = orient(rng);
    rc.field = random_field(leaf.rect, p.delta, field_bound, p.d_max(), rng, zero_boundary);
    ids.push_back(rc.domain_id);
    code.codes.push_back(std::move(rc));
  }
  std::uniform_int_distribution<int> z(0, 255);
  for (auto [y, x] : vertex_positions(p, leaves, ids))
    code.vertices.push_back({x, y, static_cast<std::uint8_t>(z(rng))});
  return quantized(std::move(code));
}

/// Image-space fixed point of a code, rounded to 8 bits.
inline Gray8 attractor_of(const CompressedImage& code, int sweeps = 400) {
  return decode(code, sweeps, 0.0).image;
}

/// Path existence by Floyd-Warshall closure; strongly connected when every
/// pair is mutually reachable by a path of length >= 1 or is the same node.
inline bool brute_force_irreducible(const std::vector<std::vector<int>>& m) {
  const std::size_t n = m.size();
  if (n == 0) return false;
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) {
    reach[i][i] = true;
    for (std::size_t j = 0; j < n; ++j)
      if (m[i][j] != 0) reach[i][j] = true;
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (reach[i][k] && reach[k][j]) reach[i][j] = true;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (!reach[i][j]) return false;
  return true;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("rifs_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace rifs::testing
