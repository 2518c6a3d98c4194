#pragma once

// Command-line front end: encode, decode, verify, render, report.
// run_cli() takes argv-style arguments and two streams so tests can drive it
// in-process. Reports go to `err`; `out` carries only the report CSV line.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rifs/rifs.hpp"

namespace rifs::cli {

struct Options {
  std::string input;
  std::string output;
  std::string original;  // report
  std::string decoded;   // report
  EncoderConfig encoder;
  int iters = 16;
  double eps = 0.25;
  std::string initial;
  std::uint64_t seed = 1;
  long long points = 1'000'000;
  std::string mode = "chaos";
};

/// Checks that do not need the image.
inline void check_flags(const Options& o) {
  const EncoderConfig& c = o.encoder;
  auto power_of_two = [](int v) { return v > 0 && (v & (v - 1)) == 0; };
  if (!power_of_two(c.region_cell) || c.region_cell < kMinRegionCell)
    throw ConfigError("--cell must be a power of two >= " + std::to_string(kMinRegionCell));
  if (c.domain_factor < 2) throw ConfigError("--domain-factor must be >= 2");
  if (c.domain_stride < 0) throw ConfigError("--stride must be >= 0");
  if (!(c.tolerance >= 0.0) || !std::isfinite(c.tolerance))
    throw ConfigError("--tolerance must be finite and >= 0");
  if (!(c.d_max > 0.0 && c.d_max < 1.0)) throw ConfigError("--dmax must lie in (0, 1)");
  if (!power_of_two(c.delta) || c.delta < 2) throw ConfigError("--delta must be a power of two >= 2");
  if (c.max_split_depth < 0) throw ConfigError("--max-depth must be >= 0");
  if (o.iters < 1) throw ConfigError("--iters must be >= 1");
  if (!(o.eps >= 0.0)) throw ConfigError("--eps must be >= 0");
  if (o.points < 0) throw ConfigError("--points must be >= 0");
  if (o.mode != "chaos" && o.mode != "dia") throw ConfigError("--mode must be chaos or dia");
}

inline std::string fixed(double v, int digits) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline int cmd_encode(const Options& o, std::ostream& err) {
  const Gray8 img = read_image(o.input);
  const auto t0 = std::chrono::steady_clock::now();
  const CompressedImage code = encode(to_image(img), o.encoder);
  const double ct = seconds_since(t0);
  const auto bytes = serialize(code);
  write_file_atomic(o.output, bytes);
  err << "encoded " << img.width() << "x" << img.height() << " into " << code.codes.size()
      << " regions, " << bytes.size() << " bytes\n"
      << "CT " << fixed(ct, 3) << " s, CR " << fixed(compression_ratio(img.values().size(), bytes.size()), 2)
      << "\n";
  return 0;
}

inline std::optional<Image> initial_buffer(const Options& o, const CompressedImage& code) {
  if (o.initial.empty()) return std::nullopt;
  char* end = nullptr;
  const double level = std::strtod(o.initial.c_str(), &end);
  if (end != o.initial.c_str() && *end == '\0')
    return Image(code.params.width, code.params.height, level);
  return to_image(read_image(o.initial, false));
}

inline DecodeResult run_decode(const Options& o, const CompressedImage& code) {
  return decode(code, o.iters, o.eps, initial_buffer(o, code));
}

inline int cmd_decode(const Options& o, std::ostream& err) {
  const CompressedImage code = read_code(o.input);
  const DecodeResult r = run_decode(o, code);
  write_image(o.output, r.image);
  err << "iterations " << r.iterations << ", last delta " << fixed(r.last_delta, 6) << "\n";
  return 0;
}

struct VerifyReport {
  double join_up_error = 0.0;
  double field_sup = 0.0;
  double d_max = 0.0;
  double contraction = 0.0;        // worst sampled rho ratio
  double contraction_bound = 0.0;  // worst max(a, sup|d|)
  std::size_t maps = 0;
  std::size_t connections = 0;
  std::size_t isolated_rows = 0;  // states with no admissible successor
  bool irreducible = false;
  bool join_up_ok = false;
  bool field_ok = false;
  bool contraction_ok = false;

  bool passed() const noexcept { return join_up_ok && field_ok && contraction_ok; }
};

inline constexpr double kJoinUpTolerance = 1e-9;

inline VerifyReport verify_code(const CompressedImage& code, std::uint64_t seed = 1) {
  VerifyReport rep;
  const auto maps = maps_from_code(code);
  const VertexLookup vertices(code.vertices);
  rep.maps = maps.size();
  rep.d_max = code.params.d_max();
  for (std::size_t k = 0; k < maps.size(); ++k) {
    const RifsMap& m = maps[k];
    const Rect& s = m.planar.source;
    for (int cy : {s.y0, s.y1}) {
      for (int cx : {s.x0, s.x1}) {
        const Point3 p = eval_w(m, cx, cy, vertices.z(cx, cy));
        const int tx = static_cast<int>(std::lround(p.x));
        const int ty = static_cast<int>(std::lround(p.y));
        const double err = std::abs(p.x - tx) + std::abs(p.y - ty) +
                           std::abs(p.z - vertices.z(tx, ty));
        rep.join_up_error = std::max(rep.join_up_error, err);
      }
    }
    const double sup = m.d.sup_abs();
    rep.field_sup = std::max(rep.field_sup, sup);
    const double ratios[] = {m.planar.a_x, m.planar.a_y};
    const MetricParams mp = contractivity_params(ratios, std::max(estimate_lipschitz(m), 1e-12));
    rep.contraction_bound = std::max(rep.contraction_bound, std::max(mp.a, sup));
    rep.contraction = std::max(rep.contraction, verify_contraction(m, mp.theta, 200, seed + k));
  }
  const ConnectionMatrix c = connection_matrix(maps);
  const ConnectionMatrix succ = transpose(c);
  for (std::size_t i = 0; i < succ.rows(); ++i) {
    std::size_t row = 0;
    for (auto v : succ.row(i)) row += v;
    rep.connections += row;
    if (row == 0) ++rep.isolated_rows;
  }
  rep.irreducible = is_irreducible(succ);
  rep.join_up_ok = rep.join_up_error <= kJoinUpTolerance;
  rep.field_ok = rep.field_sup <= rep.d_max + 1e-12;
  rep.contraction_ok = rep.contraction < 1.0 && rep.contraction <= rep.contraction_bound + 1e-9;
  return rep;
}

inline int cmd_verify(const Options& o, std::ostream& err) {
  const CompressedImage code = read_code(o.input);
  const VerifyReport r = verify_code(code, o.seed);
  auto status = [](bool ok) { return ok ? "ok" : "FAILED"; };
  err << "maps " << r.maps << "\n"
      << "join-up max error " << r.join_up_error << " " << status(r.join_up_ok) << "\n"
      << "field sup |d| " << fixed(r.field_sup, 6) << " (d_max " << fixed(r.d_max, 2) << ") "
      << status(r.field_ok) << "\n"
      << "sampled contraction ratio " << fixed(r.contraction, 6) << " (bound "
      << fixed(r.contraction_bound, 6) << ") " << status(r.contraction_ok) << "\n"
      << "connection matrix " << r.maps << "x" << r.maps << ", " << r.connections
      << " admissible transitions, " << r.isolated_rows << " states without successor\n"
      << "transition matrix irreducible: " << (r.irreducible ? "yes" : "no") << "\n";
  if (!r.passed()) {
    err << "verification failed\n";
    return 1;
  }
  return 0;
}

inline Gray8 render_chaos(const CompressedImage& code, std::size_t points, std::uint64_t seed) {
  const int w = code.params.width;
  const int h = code.params.height;
  if (points == 0) return Gray8(w, h, 0);
  const auto maps = maps_from_code(code);
  const Rect& r0 = maps.front().planar.target;
  const Point3 q0{(r0.x0 + r0.x1) / 2.0, (r0.y0 + r0.y1) / 2.0, kFlatInitial};
  const std::size_t burn_in = std::min<std::size_t>(100, points / 2);
  const auto cloud = chaos_game_local(maps, q0, points + burn_in, burn_in, seed);
  return to_gray8(rasterize(cloud, w, h).mean);
}

inline int cmd_render(const Options& o, std::ostream& err) {
  const CompressedImage code = read_code(o.input);
  if (o.mode == "dia") {
    const DecodeResult r = run_decode(o, code);
    write_image(o.output, r.image);
    err << "iterations " << r.iterations << ", last delta " << fixed(r.last_delta, 6) << "\n";
    return 0;
  }
  write_image(o.output, render_chaos(code, static_cast<std::size_t>(o.points), o.seed));
  err << "rendered " << o.points << " orbit points\n";
  return 0;
}

/// CT is re-measured by encoding the original with the stream's parameters
/// and the given tolerance / depth / orientation flags.
inline int cmd_report(const Options& o, std::ostream& out, std::ostream& err) {
  const Gray8 original = read_image(o.original, false);
  const Gray8 decoded = read_image(o.decoded, false);
  const auto stream = read_file(o.input);
  const CompressedImage code = deserialize(stream);
  const double p = psnr(original, decoded);
  if (original.width() != code.params.width || original.height() != code.params.height)
    throw DimensionMismatch("original does not match the stream dimensions");
  EncoderConfig c = o.encoder;
  c.region_cell = code.params.region_cell;
  c.domain_factor = code.params.domain_factor;
  c.domain_stride = code.params.domain_stride;
  c.delta = code.params.delta;
  c.d_max = code.params.d_max();
  const auto t0 = std::chrono::steady_clock::now();
  (void)encode(to_image(original), c);
  const double ct = seconds_since(t0);
  err << "CT,PSNR,CR\n";
  out << fixed(ct, 2) << "," << fixed(p, 2) << ","
      << fixed(compression_ratio(original.values().size(), stream.size()), 2) << "\n";
  return 0;
}

inline void add_encoder_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--cell", o.encoder.region_cell, "top-level region side in pixels")
      ->capture_default_str();
  cmd->add_option("--domain-factor", o.encoder.domain_factor, "domain side / region side")
      ->capture_default_str();
  cmd->add_option("--stride", o.encoder.domain_stride, "domain lattice stride, 0 = domain side")
      ->capture_default_str();
  cmd->add_option("--tolerance", o.encoder.tolerance, "RMS error accepted without splitting")
      ->capture_default_str();
  cmd->add_option("--dmax", o.encoder.d_max, "bound on |d|, a multiple of 0.01")
      ->capture_default_str();
  cmd->add_option("--delta", o.encoder.delta, "field samples per side minus one")
      ->capture_default_str();
  cmd->add_option("--max-depth", o.encoder.max_split_depth, "quadtree split limit")
      ->capture_default_str();
  cmd->add_option("--orientations", o.encoder.search_orientations,
                  "search the four flips (true/false)")
      ->capture_default_str();
}

inline void add_decoder_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--iters", o.iters, "maximum decoding sweeps")->capture_default_str();
  cmd->add_option("--eps", o.eps, "stop when the sweep changes no pixel by this much")
      ->capture_default_str();
  cmd->add_option("--initial", o.initial, "starting buffer: a gray level or a PGM file");
}

/// args excludes the program name. Returns the process exit code.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Fractal image codec based on recurrent iterated function systems", "rifs"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  auto* enc = app.add_subcommand("encode", "compress a PGM image");
  enc->add_option("input", o.input, "input PGM")->required();
  enc->add_option("output", o.output, "output stream")->required();
  add_encoder_flags(enc, o);

  auto* dec = app.add_subcommand("decode", "decode by deterministic iteration");
  dec->add_option("input", o.input, "input stream")->required();
  dec->add_option("output", o.output, "output PGM")->required();
  add_decoder_flags(dec, o);

  auto* ver = app.add_subcommand("verify", "check join-up, contraction and connectivity");
  ver->add_option("input", o.input, "input stream")->required();
  ver->add_option("--seed", o.seed, "sampling seed")->capture_default_str();

  auto* ren = app.add_subcommand("render", "render by chaos game or deterministic iteration");
  ren->add_option("input", o.input, "input stream")->required();
  ren->add_option("output", o.output, "output PGM")->required();
  ren->add_option("--mode", o.mode, "chaos or dia")->capture_default_str();
  ren->add_option("--points", o.points, "orbit points")->capture_default_str();
  ren->add_option("--seed", o.seed, "orbit seed")->capture_default_str();
  add_decoder_flags(ren, o);

  auto* rep = app.add_subcommand("report", "print CT,PSNR,CR for a coding run");
  rep->add_option("original", o.original, "original PGM")->required();
  rep->add_option("decoded", o.decoded, "decoded PGM")->required();
  rep->add_option("input", o.input, "stream")->required();
  add_encoder_flags(rep, o);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    check_flags(o);
    if (enc->parsed()) return cmd_encode(o, err);
    if (dec->parsed()) return cmd_decode(o, err);
    if (ver->parsed()) return cmd_verify(o, err);
    if (ren->parsed()) return cmd_render(o, err);
    if (rep->parsed()) return cmd_report(o, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace rifs::cli
