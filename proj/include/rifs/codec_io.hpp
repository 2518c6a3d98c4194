#pragma once

// PGM image files, quality metrics and the compressed stream format.
//
// Stream layout (little-endian):
//   "RIFC" | u8 version=1 | u16 width | u16 height | u8 log2(region_cell)
//   | u8 domain_factor | u8 delta | u8 round(100 * d_max) | u16 domain_stride
//   | quadtree split bits, pre-order, MSB first, zero padded to a byte
//   | per leaf: u16 domain_id, u8 orientation, (delta+1)^2 u8 field codes
//   | vertex plane: u8 per vertex, (y, x) order, vertex set implied by the
//     tree and the domain ids
//   | u32 CRC-32 of everything before it

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "rifs/compressed_image.hpp"
#include "rifs/error.hpp"
#include "rifs/plane.hpp"

namespace rifs {

inline constexpr std::uint8_t kStreamVersion = 1;
inline constexpr char kMagic[4] = {'R', 'I', 'F', 'C'};
inline constexpr std::size_t kHeaderSize = 15;

// ---------------------------------------------------------------- images --

inline bool is_codec_side(int n) noexcept {
  return n >= 3 && std::has_single_bit(static_cast<unsigned>(n - 1));
}

/// Largest 2^p + 1 not exceeding n (0 when there is none).
inline int codec_side_below(int n) noexcept {
  if (n < 3) return 0;
  return static_cast<int>(std::bit_floor(static_cast<unsigned>(n - 1))) + 1;
}

inline Gray8 parse_pgm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  auto fail = [](const std::string& why) -> FormatError { return FormatError(why); };
  if (bytes.size() < 2 || bytes[0] != 'P') throw fail("not a PNM file");
  if (bytes[1] != '5')
    throw fail(std::string("unsupported PNM type P") + static_cast<char>(bytes[1]) +
               " (only 8-bit grayscale P5 is accepted)");
  pos = 2;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto number = [&] {
    skip_space();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw fail("malformed PGM header");
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > 1'000'000) throw fail("PGM header value too large");
    }
    return static_cast<int>(v);
  };
  const int w = number();
  const int h = number();
  const int maxval = number();
  if (w < 1 || h < 1) throw fail("empty PGM image");
  if (maxval != 255) throw fail("PGM maxval must be 255, got " + std::to_string(maxval));
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw fail("malformed PGM header");
  ++pos;
  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() - pos < need) throw fail("PGM pixel data is truncated");
  Gray8 img(w, h);
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), need, img.values().begin());
  return img;
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Writes to a sibling temporary and renames, so a failed write never leaves
/// a partial file behind.
inline void write_file_atomic(const std::filesystem::path& path,
                              std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw FormatError("write failed for " + path.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

inline std::vector<std::uint8_t> pgm_bytes(const Gray8& img) {
  const std::string header =
      "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.values().begin(), img.values().end());
  return out;
}

inline void write_image(const std::filesystem::path& path, const Gray8& img) {
  write_file_atomic(path, pgm_bytes(img));
}

/// Reads an 8-bit P5 file. With `codec_dims` the sides must be 2^p + 1.
inline Gray8 read_image(const std::filesystem::path& path, bool codec_dims = true) {
  Gray8 img = parse_pgm(read_file(path));
  if (codec_dims && (!is_codec_side(img.width()) || !is_codec_side(img.height()))) {
    const int w = codec_side_below(img.width());
    const int h = codec_side_below(img.height());
    throw DimensionError(path.string() + " is " + std::to_string(img.width()) + "x" +
                         std::to_string(img.height()) + "; sides must be 2^p + 1" +
                         (w && h ? ", crop to " + std::to_string(w) + "x" + std::to_string(h)
                                 : std::string()));
  }
  return img;
}

// --------------------------------------------------------------- metrics --

/// 10 log10(255^2 / MSE); +infinity when the images are identical.
template <class A, class B>
double psnr(const Plane<A>& a, const Plane<B>& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw DimensionMismatch(std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                            " vs " + std::to_string(b.width()) + "x" + std::to_string(b.height()));
  double sum = 0.0;
  auto va = a.values();
  auto vb = b.values();
  for (std::size_t i = 0; i < va.size(); ++i) {
    const double e = static_cast<double>(va[i]) - static_cast<double>(vb[i]);
    sum += e * e;
  }
  if (sum == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = sum / static_cast<double>(va.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

inline double compression_ratio(std::size_t raw_bytes, std::size_t stream_bytes) {
  if (stream_bytes == 0) throw RangeError("empty stream");
  return static_cast<double>(raw_bytes) / static_cast<double>(stream_bytes);
}

struct QualityReport {
  double psnr = 0.0;
  double cr = 0.0;
  double encode_seconds = 0.0;
  double decode_seconds = 0.0;
};

// ----------------------------------------------------------------- stream --

inline std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1u << 30));
    crc = ::crc32(crc, bytes.data() + pos, chunk);
    pos += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

namespace detail {

class Writer {
 public:
  void u8(unsigned v) { out_.push_back(static_cast<std::uint8_t>(v)); }
  void u16(unsigned v) {
    u8(v & 0xFF);
    u8((v >> 8) & 0xFF);
  }
  void u32(std::uint32_t v) {
    u16(v & 0xFFFF);
    u16(v >> 16);
  }
  std::vector<std::uint8_t>& bytes() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  unsigned u8() {
    if (pos_ >= in_.size()) throw TruncatedStream("stream ends at byte " + std::to_string(pos_));
    return in_[pos_++];
  }
  unsigned u16() {
    const unsigned lo = u8();
    return lo | (u8() << 8);
  }
  std::uint32_t u32() {
    const std::uint32_t lo = u16();
    return lo | (static_cast<std::uint32_t>(u16()) << 16);
  }
  std::size_t position() const noexcept { return pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

inline int log2_exact(int v) { return std::countr_zero(static_cast<unsigned>(v)); }

/// Parses everything except the checksum. Structural problems raise
/// CorruptCode, running out of bytes raises TruncatedStream.
inline CompressedImage parse_body(Reader& r) {
  CompressedImage code;
  CodecParams& p = code.params;
  p.width = static_cast<int>(r.u16());
  p.height = static_cast<int>(r.u16());
  const unsigned cell_log2 = r.u8();
  if (cell_log2 > 15) throw CorruptCode("region cell exponent " + std::to_string(cell_log2));
  p.region_cell = 1 << cell_log2;
  p.domain_factor = static_cast<int>(r.u8());
  p.delta = static_cast<int>(r.u8());
  p.d_max_percent = static_cast<int>(r.u8());
  p.domain_stride = static_cast<int>(r.u16());
  try {
    validate(p);
  } catch (const Error& e) {
    throw CorruptCode(std::string("invalid header: ") + e.what());
  }

  unsigned byte = 0;
  int bit = 8;
  auto next_bit = [&] {
    if (bit == 8) {
      byte = r.u8();
      bit = 0;
    }
    return ((byte >> (7 - bit++)) & 1u) != 0;
  };
  std::size_t bits_read = 0;
  const auto leaves = leaves_from_bits(
      p,
      [&] {
        const bool v = next_bit();
        code.split_bits.push_back(v);
        return v;
      },
      &bits_read);
  if (bits_read % 8 != 0 && (byte & ((1u << (8 - bits_read % 8)) - 1u)) != 0)
    throw CorruptCode("nonzero padding after the split bits");

  const double d_max = p.d_max();
  const auto samples = static_cast<std::size_t>(p.delta + 1) * (p.delta + 1);
  std::vector<int> ids;
  for (const Leaf& leaf : leaves) {
    RegionCode c;
    c.region = leaf.rect;
    c.depth = leaf.depth;
    c.domain_id = static_cast<int>(r.u16());
    c.orientation = static_cast<int>(r.u8());
    if (c.orientation >= kOrientationCount)
      throw CorruptCode("orientation byte " + std::to_string(c.orientation));
    p.domain_rect(c.depth, c.domain_id);  // throws CorruptCode
    c.field.rect = leaf.rect;
    c.field.delta_x = p.delta;
    c.field.delta_y = p.delta;
    c.field.d_max = d_max;
    c.field.ratios.resize(samples);
    for (double& ratio : c.field.ratios)
      ratio = dequantize_ratio(static_cast<std::uint8_t>(r.u8()), d_max);
    ids.push_back(c.domain_id);
    code.codes.push_back(std::move(c));
  }
  for (auto [y, x] : vertex_positions(p, leaves, ids))
    code.vertices.push_back({x, y, static_cast<std::uint8_t>(r.u8())});
  return code;
}

}  // namespace detail

inline std::vector<std::uint8_t> serialize(const CompressedImage& code) {
  const CodecParams& p = code.params;
  validate(p);
  const auto leaves = leaves_from_bits(p, code.split_bits);
  if (leaves.size() != code.codes.size())
    throw CorruptCode("code count does not match the split bits");
  detail::Writer w;
  for (char c : kMagic) w.u8(static_cast<unsigned char>(c));
  w.u8(kStreamVersion);
  w.u16(static_cast<unsigned>(p.width));
  w.u16(static_cast<unsigned>(p.height));
  w.u8(static_cast<unsigned>(detail::log2_exact(p.region_cell)));
  w.u8(static_cast<unsigned>(p.domain_factor));
  w.u8(static_cast<unsigned>(p.delta));
  w.u8(static_cast<unsigned>(p.d_max_percent));
  w.u16(static_cast<unsigned>(p.domain_stride));

  unsigned byte = 0;
  int bit = 0;
  for (bool b : code.split_bits) {
    byte |= (b ? 1u : 0u) << (7 - bit);
    if (++bit == 8) {
      w.u8(byte);
      byte = 0;
      bit = 0;
    }
  }
  if (bit != 0) w.u8(byte);

  const double d_max = p.d_max();
  const auto samples = static_cast<std::size_t>(p.delta + 1) * (p.delta + 1);
  std::vector<int> ids;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    const RegionCode& c = code.codes[i];
    if (c.region != leaves[i].rect || c.field.ratios.size() != samples)
      throw CorruptCode("region code " + std::to_string(i) + " does not match the tree");
    if (c.orientation < 0 || c.orientation >= kOrientationCount)
      throw CorruptCode("bad orientation");
    p.domain_rect(leaves[i].depth, c.domain_id);
    w.u16(static_cast<unsigned>(c.domain_id));
    w.u8(static_cast<unsigned>(c.orientation));
    for (double r : c.field.ratios) w.u8(quantize_ratio(r, d_max));
    ids.push_back(c.domain_id);
  }
  const auto positions = vertex_positions(p, leaves, ids);
  if (positions.size() != code.vertices.size())
    throw CorruptCode("vertex plane holds " + std::to_string(code.vertices.size()) +
                      " values, the tree needs " + std::to_string(positions.size()));
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const Vertex& v = code.vertices[i];
    if (v.y != positions[i].first || v.x != positions[i].second)
      throw CorruptCode("vertex plane out of order at entry " + std::to_string(i));
    w.u8(v.z);
  }
  w.u32(crc32_of(w.bytes()));
  return std::move(w.bytes());
}

inline CompressedImage deserialize(std::span<const std::uint8_t> bytes) {
  const std::size_t magic_len = std::min<std::size_t>(bytes.size(), 4);
  for (std::size_t i = 0; i < magic_len; ++i)
    if (bytes[i] != static_cast<std::uint8_t>(kMagic[i]))
      throw MagicMismatch("stream does not start with RIFC");
  if (bytes.size() < 5) throw TruncatedStream("stream ends inside the header");
  if (bytes[4] != kStreamVersion)
    throw VersionError("stream version " + std::to_string(bytes[4]) + ", expected " +
                       std::to_string(kStreamVersion));

  auto checksum_ok = [&](std::size_t body) {
    if (body + 4 > bytes.size()) return false;
    detail::Reader tail(bytes.subspan(body, 4));
    return crc32_of(bytes.first(body)) == tail.u32();
  };

  detail::Reader r(bytes.subspan(5));
  CompressedImage code;
  try {
    code = detail::parse_body(r);
  } catch (const CorruptCode&) {
    // A damaged stream usually shows up structurally first; report the
    // checksum when it disagrees, since that is the root cause.
    if (bytes.size() >= 4 && !checksum_ok(bytes.size() - 4))
      throw ChecksumError("checksum mismatch");
    throw;
  }
  const std::size_t body = 5 + r.position();
  if (bytes.size() < body + 4) throw TruncatedStream("stream ends before the checksum");
  if (!checksum_ok(body)) throw ChecksumError("checksum mismatch");
  if (bytes.size() != body + 4)
    throw CorruptCode(std::to_string(bytes.size() - body - 4) + " trailing bytes");
  return code;
}

inline double compression_ratio(const CompressedImage& code) {
  return compression_ratio(static_cast<std::size_t>(code.params.width) * code.params.height,
                           serialize(code).size());
}

inline CompressedImage read_code(const std::filesystem::path& path) {
  return deserialize(read_file(path));
}

inline void write_code(const std::filesystem::path& path, const CompressedImage& code) {
  write_file_atomic(path, serialize(code));
}

}  // namespace rifs
