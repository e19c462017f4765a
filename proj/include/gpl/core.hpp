#pragma once

// Domain types shared by every module.
//
// Coordinates: x is the column index, y the row index, and integer
// coordinates sit on pixel centers. Angles are measured from the +x axis
// towards +y in these (x right, y down) pixel coordinates.

#include <gpl/error.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gpl {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kHalfPi = std::numbers::pi / 2.0;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Geometric ellipse for one slice. `w` is the semi-major axis and lies
/// along direction `theta`; `h` is the semi-minor axis.
struct EllipseParams {
  double cx = 0.0;
  double cy = 0.0;
  double w = 1.0;
  double h = 1.0;
  double theta = 0.0;

  friend bool operator==(const EllipseParams&, const EllipseParams&) = default;
};

/// True when the two semi-axes are equal to within 1e-9 relative.
inline bool is_circle(double w, double h) noexcept {
  return std::abs(w - h) <= 1e-9 * std::max(w, h);
}

/// Reduces an angle into [-pi/2, pi/2] by multiples of pi. -pi/2 maps to pi/2
/// so that every orientation has exactly one representative.
inline double reduce_half_turn(double angle) noexcept {
  double a = std::remainder(angle, kPi);
  if (a <= -kHalfPi) a = kHalfPi;
  if (a > kHalfPi) a = kHalfPi;
  return a;
}

/// Orders the axes (major first), rotates the angle by pi/2 when the axes
/// were swapped, and reduces it into [-pi/2, pi/2]. Circles get theta = 0.
inline EllipseParams canonicalize_ellipse(double cx, double cy, double r1, double r2,
                                          double angle) {
  if (!(r1 > 0.0) || !(r2 > 0.0)) {
    throw Error(ErrorCode::NonPositiveAxis, "ellipse semi-axes must be positive");
  }
  if (!std::isfinite(angle) || !std::isfinite(cx) || !std::isfinite(cy) ||
      !std::isfinite(r1) || !std::isfinite(r2)) {
    throw Error(ErrorCode::NonFiniteInput, "ellipse parameters must be finite");
  }
  EllipseParams p{cx, cy, r1, r2, angle};
  if (r1 < r2) {
    std::swap(p.w, p.h);
    p.theta += kHalfPi;
  }
  p.theta = is_circle(p.w, p.h) ? 0.0 : reduce_half_turn(p.theta);
  return p;
}

inline EllipseParams canonicalize_ellipse(const EllipseParams& p) {
  return canonicalize_ellipse(p.cx, p.cy, p.w, p.h, p.theta);
}

/// Point on the ellipse boundary at parametric angle `t`.
inline Point2 ellipse_point(const EllipseParams& p, double t) noexcept {
  const double c = std::cos(p.theta), s = std::sin(p.theta);
  const double u = p.w * std::cos(t), v = p.h * std::sin(t);
  return {p.cx + u * c - v * s, p.cy + u * s + v * c};
}

/// `count` boundary points at equally spaced parametric angles.
inline std::vector<Point2> ellipse_points(const EllipseParams& p, std::size_t count) {
  std::vector<Point2> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(ellipse_point(p, 2.0 * kPi * static_cast<double>(i) / static_cast<double>(count)));
  }
  return out;
}

/// Algebraic conic a x^2 + b xy + c y^2 + d x + e y + f = 0 describing an
/// ellipse. Stored in the unit-norm gauge with a > 0.
class ConicCoefficients {
 public:
  ConicCoefficients() = default;

  /// Re-gauges the given coefficients. Throws NotAnEllipse unless
  /// b^2 - 4ac < 0.
  ConicCoefficients(double a, double b, double c, double d, double e, double f) {
    std::array<double, 6> v{a, b, c, d, e, f};
    for (double x : v) {
      if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteInput, "conic coefficient is not finite");
    }
    // Pre-scale by the largest magnitude so the norm cannot overflow.
    double big = 0.0;
    for (double x : v) big = std::max(big, std::abs(x));
    if (big == 0.0) throw Error(ErrorCode::NotAnEllipse, "all conic coefficients are zero");
    for (double& x : v) x /= big;
    if (v[1] * v[1] - 4.0 * v[0] * v[2] >= 0.0) {
      throw Error(ErrorCode::NotAnEllipse, "conic discriminant b^2 - 4ac is not negative");
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (v[0] < 0.0) norm = -norm;
    for (double& x : v) x /= norm;
    coef_ = v;
  }

  double a() const noexcept { return coef_[0]; }
  double b() const noexcept { return coef_[1]; }
  double c() const noexcept { return coef_[2]; }
  double d() const noexcept { return coef_[3]; }
  double e() const noexcept { return coef_[4]; }
  double f() const noexcept { return coef_[5]; }
  const std::array<double, 6>& values() const noexcept { return coef_; }

  double discriminant() const noexcept { return b() * b() - 4.0 * a() * c(); }

  /// Algebraic residual at a point.
  double evaluate(double x, double y) const noexcept {
    return a() * x * x + b() * x * y + c() * y * y + d() * x + e() * y + f();
  }

 private:
  std::array<double, 6> coef_{1.0 / std::numbers::sqrt2, 0.0, 1.0 / std::numbers::sqrt2, 0.0, 0.0, 0.0};
};

struct Spacing {
  double sx = 1.0;
  double sy = 1.0;
  double sz = 1.0;

  friend bool operator==(const Spacing&, const Spacing&) = default;
};

struct Shape3 {
  std::size_t depth = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t count() const noexcept { return depth * height * width; }
  std::size_t slice_count() const noexcept { return height * width; }

  friend bool operator==(const Shape3&, const Shape3&) = default;
};

inline std::string to_string(const Shape3& s) {
  return std::to_string(s.depth) + "x" + std::to_string(s.height) + "x" + std::to_string(s.width);
}

/// Dense 2-D image, row-major.
template <typename T>
class Image {
 public:
  using value_type = T;

  Image() = default;
  Image(std::size_t width, std::size_t height, T fill = T{})
      : width_(width), height_(height), data_(width * height, fill) {}
  Image(std::size_t width, std::size_t height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != width_ * height_) {
      throw Error(ErrorCode::ShapeMismatch, "image data has " + std::to_string(data_.size()) +
                                                " elements, expected " + std::to_string(width_ * height_));
    }
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T operator()(std::size_t col, std::size_t row) const { return data_[row * width_ + col]; }
  T& operator()(std::size_t col, std::size_t row) { return data_[row * width_ + col]; }

  std::span<const T> data() const noexcept { return data_; }
  std::span<T> data() noexcept { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<T> data_;
};

/// Binary slice; values are 0 or 1.
using MaskSlice = Image<std::uint8_t>;
/// Scalar field with values in [0, 1].
using HeatmapSlice = Image<double>;

/// Dense 3-D volume: slices in index order, each row-major.
template <typename T>
class Volume {
 public:
  using value_type = T;

  Volume() = default;
  explicit Volume(Shape3 shape, T fill = T{}, Spacing spacing = {})
      : shape_(shape), spacing_(spacing), data_(shape.count(), fill) {}
  Volume(Shape3 shape, std::vector<T> data, Spacing spacing = {})
      : shape_(shape), spacing_(spacing), data_(std::move(data)) {
    if (data_.size() != shape_.count()) {
      throw Error(ErrorCode::ShapeMismatch, "volume data has " + std::to_string(data_.size()) +
                                                " elements, declared " + to_string(shape_));
    }
  }

  const Shape3& shape() const noexcept { return shape_; }
  std::size_t depth() const noexcept { return shape_.depth; }
  std::size_t height() const noexcept { return shape_.height; }
  std::size_t width() const noexcept { return shape_.width; }
  std::size_t size() const noexcept { return data_.size(); }
  const Spacing& spacing() const noexcept { return spacing_; }
  void set_spacing(Spacing s) noexcept { spacing_ = s; }

  std::size_t index(std::size_t z, std::size_t y, std::size_t x) const noexcept {
    return (z * shape_.height + y) * shape_.width + x;
  }
  T operator()(std::size_t z, std::size_t y, std::size_t x) const { return data_[index(z, y, x)]; }
  T& operator()(std::size_t z, std::size_t y, std::size_t x) { return data_[index(z, y, x)]; }

  std::span<const T> data() const noexcept { return data_; }
  std::span<T> data() noexcept { return data_; }

  std::span<const T> slice(std::size_t z) const {
    return std::span<const T>(data_).subspan(z * shape_.slice_count(), shape_.slice_count());
  }
  std::span<T> slice(std::size_t z) {
    return std::span<T>(data_).subspan(z * shape_.slice_count(), shape_.slice_count());
  }

  Image<T> slice_image(std::size_t z) const {
    auto s = slice(z);
    return Image<T>(shape_.width, shape_.height, std::vector<T>(s.begin(), s.end()));
  }

  void set_slice(std::size_t z, const Image<T>& img) {
    if (img.width() != shape_.width || img.height() != shape_.height) {
      throw Error(ErrorCode::ShapeMismatch, "slice shape does not match volume");
    }
    std::copy(img.data().begin(), img.data().end(), slice(z).begin());
  }

  /// Data equality; spacing is metadata and is not compared.
  friend bool operator==(const Volume& a, const Volume& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape3 shape_{};
  Spacing spacing_{};
  std::vector<T> data_;
};

using MaskVolume = Volume<std::uint8_t>;
using HeatmapVolume = Volume<double>;

/// Ellipse annotation for one slice.
struct EllipseRecord {
  std::size_t slice_index = 0;
  EllipseParams params;

  friend bool operator==(const EllipseRecord&, const EllipseRecord&) = default;
};

enum class VolumeKind { Binary, Heatmap };

/// Checks element count and value range for raw volume data.
inline void validate_volume(const Shape3& shape, std::span<const double> data, VolumeKind kind) {
  if (data.size() != shape.count()) {
    throw Error(ErrorCode::ShapeMismatch, "declared " + to_string(shape) + " but got " +
                                              std::to_string(data.size()) + " elements");
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double v = data[i];
    const bool ok = kind == VolumeKind::Binary ? (v == 0.0 || v == 1.0) : (v >= 0.0 && v <= 1.0);
    if (!ok) {
      throw Error(ErrorCode::OutOfRangeValue,
                  "value " + std::to_string(v) + " at element " + std::to_string(i) +
                      (kind == VolumeKind::Binary ? " is not 0 or 1" : " is outside [0, 1]"));
    }
  }
}

template <typename T>
void validate_volume(const Volume<T>& v, VolumeKind kind) {
  std::vector<double> tmp(v.data().begin(), v.data().end());
  validate_volume(v.shape(), tmp, kind);
}

inline void validate_volume(const Volume<double>& v, VolumeKind kind) {
  validate_volume(v.shape(), v.data(), kind);
}

template <typename T>
std::size_t count_foreground(std::span<const T> data) {
  return static_cast<std::size_t>(std::count_if(data.begin(), data.end(), [](T v) { return v != T{}; }));
}

template <typename A, typename B>
void require_same_shape(const Volume<A>& a, const Volume<B>& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw Error(ErrorCode::ShapeMismatch,
                std::string(what) + ": shapes " + to_string(a.shape()) + " and " + to_string(b.shape()) + " differ");
  }
}

}  // namespace gpl
