// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit when any
// criterion fails.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "support.hpp"

using namespace rifs;
using namespace rifs::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// 1. eval_w maps every domain corner, at its g value, onto the region corner
//    and its h value.
Outcome join_up() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> cell_log(2, 5);
  std::uniform_int_distribution<int> cells(2, 6);
  std::uniform_int_distribution<int> factor(2, 4);
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_real_distribution<double> z(0.0, 255.0);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int cell = 1 << cell_log(rng);
    const int w = cells(rng) * cell + 1;
    const int h = cells(rng) * cell + 1;
    Partition grid = build_partition(w, h, cell);
    const auto& regions = grid.regions();
    const Region region = regions[std::uniform_int_distribution<std::size_t>(0, regions.size() - 1)(rng)];
    // domain up to a times the region, per axis, anywhere inside the image
    const int dw = std::min(w - 1, factor(rng) * cell);
    const int dh = std::min(h - 1, factor(rng) * cell);
    const int dx = std::uniform_int_distribution<int>(0, w - 1 - dw)(rng);
    const int dy = std::uniform_int_distribution<int>(0, h - 1 - dh)(rng);
    const Rect dom{dx, dy, dx + dw, dy + dh};
    const bool fx = coin(rng) != 0;
    const bool fy = coin(rng) != 0;
    const PlanarMap planar = make_planar_map(dom, region.rect, fx, fy);
    const BilinearPatch g{dom, {z(rng), z(rng), z(rng), z(rng)}};
    const BilinearPatch hp{region.rect, {z(rng), z(rng), z(rng), z(rng)}};
    const int delta = 1 << std::uniform_int_distribution<int>(1, std::min(3, cell_log(rng)))(rng);
    const RifsMap m = make_rifs_map(planar, random_field(region.rect, delta, 0.9, 0.95, rng), g, hp);
    const double gc[2][2] = {{g.corner_values[0], g.corner_values[1]},
                             {g.corner_values[2], g.corner_values[3]}};
    const double hc[2][2] = {{hp.corner_values[0], hp.corner_values[1]},
                             {hp.corner_values[2], hp.corner_values[3]}};
    for (int cy = 0; cy < 2; ++cy)
      for (int cx = 0; cx < 2; ++cx) {
        const Point3 p = eval_w(m, cx ? dom.x1 : dom.x0, cy ? dom.y1 : dom.y0, gc[cy][cx]);
        const int tx = fx ? 1 - cx : cx;
        const int ty = fy ? 1 - cy : cy;
        const Rect& r = region.rect;
        const double err = std::abs(p.x - (tx ? r.x1 : r.x0)) + std::abs(p.y - (ty ? r.y1 : r.y0)) +
                           std::abs(p.z - hc[ty][tx]);
        worst = std::max(worst, err);
      }
  }
  return {worst <= 1e-9, "max corner error " + fmt("%.3g", worst)};
}

// 2. Single-domain RIFS on a 5x5 grid; vertices reproduce stored z.
Outcome attractor_interpolation() {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<int> zdist(0, 255);
  CodecParams p{129, 129, 32, 4, 128, 4, 95};
  validate(p);
  std::vector<std::vector<double>> zs(5, std::vector<double>(5));
  for (auto& row : zs)
    for (double& v : row) v = zdist(rng);
  Image surface(129, 129);
  for (int y = 0; y < 129; ++y)
    for (int x = 0; x < 129; ++x) {
      const int i = std::min(x / 32, 3);
      const int j = std::min(y / 32, 3);
      const double tx = (x - 32.0 * i) / 32.0;
      const double ty = (y - 32.0 * j) / 32.0;
      const double base = bilerp(zs[j][i], zs[j][i + 1], zs[j + 1][i], zs[j + 1][i + 1], tx, ty);
      surface(x, y) = base + 25.0 * std::sin(M_PI * x / 32.0) * std::sin(M_PI * y / 32.0) +
                      15.0 * std::sin(M_PI * x / 128.0) * std::sin(M_PI * y / 64.0);
    }
  CompressedImage code;
  code.params = p;
  const Rect domain{0, 0, 128, 128};
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 4; ++i) {
      RegionCode rc;
      rc.region = Rect{32 * i, 32 * j, 32 * (i + 1), 32 * (j + 1)};
      rc.field = estimate_field(surface, rc.region, domain, 0, p.d_max(), 4, 4);
      code.split_bits.push_back(false);
      code.codes.push_back(rc);
    }
  for (int j = 0; j <= 4; ++j)
    for (int i = 0; i <= 4; ++i)
      code.vertices.push_back({32 * i, 32 * j, static_cast<std::uint8_t>(zs[j][i])});
  code = quantized(code);
  const DecodeResult r = decode(code, 16, 0.0);
  double worst = 0.0;
  for (const Vertex& v : code.vertices) worst = std::max(worst, std::abs(r.raw(v.x, v.y) - v.z));
  return {worst <= 0.5, "max vertex error " + fmt("%.3g", worst)};
}

// 3. Successive sweep deltas shrink by at least d_max.
Outcome decode_contraction() {
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Image img = random_image(65, 65, 300 + i, 4.0 + i % 5 * 4.0);
    const CompressedImage code = encode(img, EncoderConfig{});
    const DecodeResult r = decode(code, 16, 0.0);
    for (std::size_t k = 1; k < r.deltas.size(); ++k)
      if (r.deltas[k - 1] > 1e-9) worst = std::max(worst, r.deltas[k] / r.deltas[k - 1]);
  }
  return {worst <= 0.95 + 1e-12, "max delta ratio " + fmt("%.4f", worst)};
}

// 4. Region built as c * (domain - g) + h; the field recovers c.
Outcome field_recovery() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(0.0, 255.0);
  const double d_max = 0.95;
  double raw_err = 0.0;
  double q_err = 0.0;
  for (double c : {-0.7, 0.3, 0.7}) {
    for (int orientation = 0; orientation < kOrientationCount; ++orientation) {
      Image img(129, 129);
      for (double& v : img.values()) v = u(rng);
      const Rect dom{0, 0, 64, 64};
      const Rect reg{80, 72, 112, 104};
      const BilinearPatch g = patch_from_image(img, dom);
      const BilinearPatch h{reg, {u(rng), u(rng), u(rng), u(rng)}};
      for (int y = reg.y0; y <= reg.y1; ++y)
        for (int x = reg.x0; x <= reg.x1; ++x) {
          const int ux = x - reg.x0;
          const int uy = y - reg.y0;
          const int sx = dom.x0 + 2 * (flips_x(orientation) ? 32 - ux : ux);
          const int sy = dom.y0 + 2 * (flips_y(orientation) ? 32 - uy : uy);
          img(x, y) = c * (img(sx, sy) - eval_bilinear(g, sx, sy)) + eval_bilinear(h, x, y);
        }
      const ContractivityField f = estimate_field(img, reg, dom, orientation, d_max, 4, 4);
      for (int l = 0; l <= 4; ++l)
        for (int k = 0; k <= 4; ++k) {
          if ((k == 0 || k == 4) && (l == 0 || l == 4)) continue;
          const double r = f.at(k, l);
          raw_err = std::max(raw_err, std::abs(r - c));
          q_err = std::max(q_err, std::abs(dequantize_ratio(quantize_ratio(r, d_max), d_max) - c));
        }
    }
  }
  return {raw_err <= 1e-6 && q_err <= d_max / 255.0,
          "raw error " + fmt("%.3g", raw_err) + ", quantized error " + fmt("%.4f", q_err) +
              " (bound " + fmt("%.4f", d_max / 255.0) + ")"};
}

// 5. An attractor of a known RIFS survives encode/decode with defaults.
Outcome self_similarity() {
  CodecParams p{129, 129, 32, 2, 64, 4, 95};
  const Gray8 attractor = attractor_of(synthetic_code(p, 505, 0.6, false, true));
  const CompressedImage code = encode(to_image(attractor), EncoderConfig{});
  const DecodeResult r = decode(deserialize(serialize(code)), 16, 0.25);
  const double q = psnr(attractor, r.image);
  return {q >= 40.0, "PSNR " + fmt("%.2f", q) + " dB, " + std::to_string(code.codes.size()) + " regions"};
}

// 6. Defaults on the natural 129x129 crop.
Outcome natural_image() {
  const Gray8 img = read_image(data_path("camera_129.pgm"));
  const auto t0 = std::chrono::steady_clock::now();
  const CompressedImage code = encode(to_image(img), EncoderConfig{});
  const double ct = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto bytes = serialize(code);
  const DecodeResult r = decode(deserialize(bytes), 16, 0.25);
  const double cr = compression_ratio(img.values().size(), bytes.size());
  const double q = psnr(img, r.image);
  return {cr >= 8.0 && q >= 28.0 && ct < 60.0,
          "CR " + fmt("%.2f", cr) + ", PSNR " + fmt("%.2f", q) + " dB, CT " + fmt("%.2f", ct) + " s, " +
              std::to_string(code.codes.size()) + " regions"};
}

// 7. Stream round trip and truncation.
Outcome stream_round_trip() {
  std::mt19937_64 rng(707);
  int mismatches = 0;
  int bad_prefixes = 0;
  std::size_t prefixes = 0;
  for (int i = 0; i < 100; ++i) {
    const int side = (1 << std::uniform_int_distribution<int>(5, 7)(rng)) + 1;
    CodecParams p;
    p.width = side;
    p.height = (1 << std::uniform_int_distribution<int>(5, 7)(rng)) + 1;
    const int fit_log = std::bit_width(static_cast<unsigned>((std::min(p.width, p.height) - 1) / 2)) - 1;
    p.region_cell = 1 << std::uniform_int_distribution<int>(3, std::min(5, fit_log))(rng);
    p.domain_factor = 2;
    p.domain_stride = 1 << std::uniform_int_distribution<int>(3, 6)(rng);
    p.delta = 1 << std::uniform_int_distribution<int>(1, 2)(rng);
    p.d_max_percent = std::uniform_int_distribution<int>(50, 99)(rng);
    validate(p);
    const CompressedImage code = synthetic_code(p, 7000 + i, 0.9, true);
    const auto bytes = serialize(code);
    const CompressedImage back = deserialize(bytes);
    if (!back.same_structure(code) || serialize(back) != bytes) ++mismatches;
    if (i % 10 == 0) {
      for (std::size_t n = 0; n < bytes.size(); ++n) {
        ++prefixes;
        try {
          deserialize(std::span<const std::uint8_t>(bytes.data(), n));
          ++bad_prefixes;
        } catch (const TruncatedStream&) {
        } catch (...) {
          ++bad_prefixes;
        }
      }
    }
  }
  return {mismatches == 0 && bad_prefixes == 0,
          std::to_string(mismatches) + " round-trip mismatches, " + std::to_string(bad_prefixes) +
              " of " + std::to_string(prefixes) + " prefixes not reported as truncated"};
}

// 8. Chaos-game raster agrees with deterministic iteration.
Outcome chaos_vs_dia() {
  CodecParams p{97, 97, 32, 2, 32, 4, 95};
  CompressedImage code = synthetic_code(p, 808, 0.5);
  // make every domain of the pool appear so each region has a successor
  std::vector<Leaf> leaves;
  std::vector<int> ids;
  for (std::size_t k = 0; k < code.codes.size(); ++k) {
    code.codes[k].domain_id = static_cast<int>(k % 4);
    leaves.push_back({code.codes[k].region, 0});
    ids.push_back(code.codes[k].domain_id);
  }
  std::mt19937_64 rng(809);
  code.vertices.clear();
  for (auto [y, x] : vertex_positions(p, leaves, ids))
    code.vertices.push_back({x, y, static_cast<std::uint8_t>(std::uniform_int_distribution<int>(0, 255)(rng))});
  const Gray8 dia = decode(code, 400, 0.0).image;
  const auto maps = maps_from_code(code);
  const auto cloud = chaos_game(maps, transition_matrix(maps), Point3{16.0, 16.0, 128.0},
                                1'000'000, 100, 42);
  const Raster raster = rasterize(cloud, p.width, p.height);
  double sum = 0.0;
  std::size_t covered = 0;
  for (int y = 0; y < p.height; ++y)
    for (int x = 0; x < p.width; ++x)
      if (raster.covered(x, y)) {
        sum += std::abs(raster.mean(x, y) - dia(x, y));
        ++covered;
      }
  const double mad = covered ? sum / static_cast<double>(covered) : 1e9;
  return {mad <= 8.0, "mean abs difference " + fmt("%.3f", mad) + " over " +
                          std::to_string(covered) + " covered pixels"};
}

// 9. Irreducibility against a brute-force closure.
Outcome irreducibility() {
  std::mt19937_64 rng(909);
  int disagreements = 0;
  int irreducible = 0;
  for (int t = 0; t < 100; ++t) {
    const int n = std::uniform_int_distribution<int>(1, 12)(rng);
    const double density = std::uniform_real_distribution<double>(0.05, 0.5)(rng);
    std::bernoulli_distribution bit(density);
    ConnectionMatrix m(n, n, 0);
    std::vector<std::vector<int>> plain(n, std::vector<int>(n, 0));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (bit(rng)) {
          m(i, j) = 1;
          plain[i][j] = 1;
        }
    const bool expected = brute_force_irreducible(plain);
    irreducible += expected;
    if (is_irreducible(m) != expected) ++disagreements;
  }
  return {disagreements == 0, std::to_string(disagreements) + " disagreements, " +
                                  std::to_string(irreducible) + " of 100 irreducible"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double limit_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"join-up exactness", 5, join_up},
      {"attractor interpolation", 5, attractor_interpolation},
      {"decoding contraction", 60, decode_contraction},
      {"field recovery", 1, field_recovery},
      {"self-similar image round trip", 60, self_similarity},
      {"natural image rate and quality", 60, natural_image},
      {"stream round trip", 5, stream_round_trip},
      {"chaos game vs iteration", 30, chaos_vs_dia},
      {"irreducibility check", 5, irreducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < criteria[i].limit_seconds;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("criterion %zu %s: %s (%s; %.2f s of %.0f s)\n", i + 1, criteria[i].name,
                pass ? "PASS" : "FAIL", o.detail.c_str(), secs, criteria[i].limit_seconds);
    std::fflush(stdout);
  }
  std::printf("%zu of %zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
