#pragma once

// File formats:
//
//   mask stacks   directory of 8-bit binary PGM (P5) files, one per slice,
//                 read in lexicographic filename order; nonzero = foreground
//   F32V          "F32V", version byte 0x01, u32le depth, height, width, then
//                 depth*height*width float32le values in (slice, row, column)
//                 order
//   ellipse CSV   header slice,cx,cy,semi_major,semi_minor,theta_rad
//
// Every writer builds the full output in memory and publishes it with a
// rename, so a failed command leaves no partial file behind.

#include <gpl/core.hpp>

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <unistd.h>

namespace gpl::io {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

inline std::vector<unsigned char> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::UnreadableFile, "cannot read " + path.string());
  return bytes;
}

inline fs::path temp_sibling(const fs::path& path) {
  return path.parent_path() / (path.filename().string() + ".tmp-" + std::to_string(::getpid()));
}

/// Writes `bytes` to a temporary sibling of `path` and renames it into place.
inline void write_file_atomic(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path() && !fs::exists(path.parent_path())) {
    throw Error(ErrorCode::WriteFailed, "directory " + path.parent_path().string() + " does not exist");
  }
  const fs::path tmp = temp_sibling(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::WriteFailed, "cannot create " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(ErrorCode::WriteFailed, "cannot write " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::WriteFailed, "cannot rename onto " + path.string());
  }
}

// ---------------------------------------------------------------------------
// PGM

namespace detail {

class PgmHeaderReader {
 public:
  PgmHeaderReader(const std::vector<unsigned char>& bytes, const std::string& name) : b_(bytes), name_(name) {}

  std::size_t next_int() {
    skip_space_and_comments();
    std::size_t v = 0;
    bool any = false;
    while (pos_ < b_.size() && b_[pos_] >= '0' && b_[pos_] <= '9') {
      v = v * 10 + static_cast<std::size_t>(b_[pos_] - '0');
      if (v > (1u << 24)) fail("header value too large");
      ++pos_;
      any = true;
    }
    if (!any) fail("malformed header");
    return v;
  }

  void expect_magic() {
    if (b_.size() < 2 || b_[0] != 'P' || b_[1] != '5') fail("not a binary PGM (P5) file");
    pos_ = 2;
  }

  /// Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_start() {
    if (pos_ >= b_.size() || !std::isspace(b_[pos_])) fail("malformed header");
    return pos_ + 1;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::UnreadableFile, name_ + ": " + what);
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      if (std::isspace(b_[pos_])) {
        ++pos_;
      } else if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<unsigned char>& b_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline MaskSlice read_pgm(const fs::path& path) {
  const auto bytes = read_file(path);
  detail::PgmHeaderReader hdr(bytes, path.string());
  hdr.expect_magic();
  const std::size_t width = hdr.next_int();
  const std::size_t height = hdr.next_int();
  const std::size_t maxval = hdr.next_int();
  if (maxval == 0 || maxval > 255) hdr.fail("only 8-bit PGM files are supported");
  if (width == 0 || height == 0) hdr.fail("empty image");
  const std::size_t start = hdr.raster_start();
  if (bytes.size() < start + width * height) {
    throw Error(ErrorCode::TruncatedFile, path.string() + ": raster is shorter than " + std::to_string(width) + "x" +
                                              std::to_string(height));
  }
  std::vector<std::uint8_t> data(width * height);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = bytes[start + i] != 0 ? 1 : 0;
  return MaskSlice(width, height, std::move(data));
}

inline std::string encode_pgm(const MaskSlice& mask) {
  std::string out = "P5\n" + std::to_string(mask.width()) + " " + std::to_string(mask.height()) + "\n255\n";
  out.reserve(out.size() + mask.size());
  for (auto v : mask.data()) out.push_back(v != 0 ? static_cast<char>(255) : static_cast<char>(0));
  return out;
}

inline void write_pgm(const MaskSlice& mask, const fs::path& path) { write_file_atomic(path, encode_pgm(mask)); }

/// PGM files of a directory in lexicographic filename order.
inline std::vector<fs::path> list_slices(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::UnreadableFile, dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".pgm") files.push_back(entry.path());
  }
  if (ec) throw Error(ErrorCode::UnreadableFile, "cannot list " + dir.string());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  return files;
}

inline MaskVolume read_mask_stack(const fs::path& dir) {
  const auto files = list_slices(dir);
  if (files.empty()) throw Error(ErrorCode::UnreadableFile, dir.string() + " contains no .pgm slices");
  std::vector<MaskSlice> slices;
  slices.reserve(files.size());
  for (const auto& f : files) {
    slices.push_back(read_pgm(f));
    if (slices.back().width() != slices.front().width() || slices.back().height() != slices.front().height()) {
      throw Error(ErrorCode::InconsistentDimensions,
                  f.string() + " is " + std::to_string(slices.back().width()) + "x" +
                      std::to_string(slices.back().height()) + " but " + files.front().string() + " is " +
                      std::to_string(slices.front().width()) + "x" + std::to_string(slices.front().height()));
    }
  }
  MaskVolume vol(Shape3{slices.size(), slices.front().height(), slices.front().width()});
  for (std::size_t z = 0; z < slices.size(); ++z) vol.set_slice(z, slices[z]);
  return vol;
}

inline std::string slice_filename(std::size_t z) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "slice_%04zu.pgm", z);
  return buf;
}

/// Writes slice_0000.pgm ... into a fresh sibling directory and swaps it in
/// for `dir`, replacing any previous contents.
inline void write_mask_stack(const MaskVolume& v, const fs::path& dir) {
  const fs::path target = dir.has_filename() ? dir : dir.parent_path();
  const fs::path staging = temp_sibling(target);
  std::error_code ec;
  fs::remove_all(staging, ec);
  if (!fs::create_directories(staging, ec) || ec) {
    throw Error(ErrorCode::WriteFailed, "cannot create " + staging.string());
  }
  try {
    for (std::size_t z = 0; z < v.depth(); ++z) write_pgm(v.slice_image(z), staging / slice_filename(z));
  } catch (...) {
    fs::remove_all(staging, ec);
    throw;
  }
  const fs::path old = target.parent_path() / (target.filename().string() + ".old-" + std::to_string(::getpid()));
  const bool had_old = fs::exists(target);
  if (had_old) {
    fs::rename(target, old, ec);
    if (ec) {
      fs::remove_all(staging, ec);
      throw Error(ErrorCode::WriteFailed, "cannot replace " + target.string());
    }
  }
  fs::rename(staging, target, ec);
  if (ec) {
    if (had_old) fs::rename(old, target, ec);
    fs::remove_all(staging, ec);
    throw Error(ErrorCode::WriteFailed, "cannot create " + target.string());
  }
  if (had_old) fs::remove_all(old, ec);
}

// ---------------------------------------------------------------------------
// F32V

inline constexpr char kF32vMagic[4] = {'F', '3', '2', 'V'};
inline constexpr std::uint8_t kF32vVersion = 0x01;
inline constexpr std::size_t kF32vHeaderSize = 4 + 1 + 12;

namespace detail {

inline void put_u32le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline std::uint32_t get_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

/// Values are narrowed to float32.
template <typename T>
std::string encode_f32v(const Volume<T>& v) {
  const auto& s = v.shape();
  for (std::size_t dim : {s.depth, s.height, s.width}) {
    if (dim > 0xFFFFFFFFu) throw Error(ErrorCode::InvalidSize, "volume dimension does not fit in 32 bits");
  }
  std::string out(kF32vMagic, 4);
  out.push_back(static_cast<char>(kF32vVersion));
  detail::put_u32le(out, static_cast<std::uint32_t>(s.depth));
  detail::put_u32le(out, static_cast<std::uint32_t>(s.height));
  detail::put_u32le(out, static_cast<std::uint32_t>(s.width));
  out.reserve(out.size() + 4 * v.size());
  for (auto value : v.data()) {
    const auto f = static_cast<float>(value);
    detail::put_u32le(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

template <typename T>
void write_f32v(const Volume<T>& v, const fs::path& path) {
  write_file_atomic(path, encode_f32v(v));
}

inline Volume<double> decode_f32v(const std::vector<unsigned char>& bytes, const std::string& name = "F32V data") {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kF32vMagic, 4) != 0) {
    throw Error(ErrorCode::BadMagic, name + " does not start with F32V");
  }
  if (bytes.size() < kF32vHeaderSize) throw Error(ErrorCode::TruncatedFile, name + ": header is incomplete");
  if (bytes[4] != kF32vVersion) {
    throw Error(ErrorCode::UnsupportedVersion, name + ": version " + std::to_string(bytes[4]) + " is not supported");
  }
  const Shape3 shape{detail::get_u32le(&bytes[5]), detail::get_u32le(&bytes[9]), detail::get_u32le(&bytes[13])};
  const std::size_t expected = kF32vHeaderSize + 4 * shape.count();
  if (bytes.size() < expected) {
    throw Error(ErrorCode::TruncatedFile, name + ": expected " + std::to_string(expected) + " bytes, found " +
                                              std::to_string(bytes.size()));
  }
  if (bytes.size() > expected) {
    throw Error(ErrorCode::TruncatedFile, name + ": " + std::to_string(bytes.size() - expected) +
                                              " trailing bytes after the declared " + to_string(shape) + " data");
  }
  std::vector<double> data(shape.count());
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = std::bit_cast<float>(detail::get_u32le(&bytes[kF32vHeaderSize + 4 * i]));
  }
  return Volume<double>(shape, std::move(data));
}

inline Volume<double> read_f32v(const fs::path& path) { return decode_f32v(read_file(path), path.string()); }

// ---------------------------------------------------------------------------
// Ellipse CSV

inline constexpr std::string_view kEllipseCsvHeader = "slice,cx,cy,semi_major,semi_minor,theta_rad";

struct EllipseCsv {
  std::vector<EllipseRecord> records;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_field(std::string_view field, std::size_t line, const char* name) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line) + ": cannot parse " + name + " from '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace detail

inline EllipseCsv parse_ellipse_csv(std::string_view text) {
  EllipseCsv out;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = detail::trim(line);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kEllipseCsvHeader) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected header '" +
                                               std::string(kEllipseCsvHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> fields;
    for (std::size_t start = 0;;) {
      const auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 6) {
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(line_no) + ": expected 6 fields, found " + std::to_string(fields.size()));
    }
    const auto slice = detail::parse_field<std::size_t>(fields[0], line_no, "slice");
    const auto cx = detail::parse_field<double>(fields[1], line_no, "cx");
    const auto cy = detail::parse_field<double>(fields[2], line_no, "cy");
    const auto major = detail::parse_field<double>(fields[3], line_no, "semi_major");
    const auto minor = detail::parse_field<double>(fields[4], line_no, "semi_minor");
    const auto theta = detail::parse_field<double>(fields[5], line_no, "theta_rad");
    EllipseParams p;
    try {
      p = canonicalize_ellipse(cx, cy, major, minor, theta);
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + e.what());
    }
    const EllipseParams raw{cx, cy, major, minor, theta};
    if (!(p == raw)) {
      out.warnings.push_back("line " + std::to_string(line_no) + ": non-canonical ellipse (semi_major=" +
                             std::string(detail::trim(fields[3])) + ", semi_minor=" +
                             std::string(detail::trim(fields[4])) + ", theta_rad=" +
                             std::string(detail::trim(fields[5])) + ") was canonicalized");
    }
    out.records.push_back({slice, p});
  }
  if (!header_seen) throw Error(ErrorCode::ParseError, "missing header");
  std::stable_sort(out.records.begin(), out.records.end(),
                   [](const EllipseRecord& a, const EllipseRecord& b) { return a.slice_index < b.slice_index; });
  for (std::size_t i = 1; i < out.records.size(); ++i) {
    if (out.records[i].slice_index == out.records[i - 1].slice_index) {
      throw Error(ErrorCode::ParseError, "duplicate record for slice " + std::to_string(out.records[i].slice_index));
    }
  }
  return out;
}

inline EllipseCsv read_ellipse_csv(const fs::path& path) {
  const auto bytes = read_file(path);
  try {
    return parse_ellipse_csv(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

/// Shortest decimal that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

inline std::string encode_ellipse_csv(std::span<const EllipseRecord> records) {
  std::string out(kEllipseCsvHeader);
  out.push_back('\n');
  for (const auto& r : records) {
    out += std::to_string(r.slice_index) + "," + format_double(r.params.cx) + "," + format_double(r.params.cy) + "," +
           format_double(r.params.w) + "," + format_double(r.params.h) + "," + format_double(r.params.theta) + "\n";
  }
  return out;
}

inline void write_ellipse_csv(std::span<const EllipseRecord> records, const fs::path& path) {
  write_file_atomic(path, encode_ellipse_csv(records));
}

}  // namespace gpl::io
