#pragma once

// Gaussian elliptical heatmaps used as pseudo labels.
//
// Each pixel gets G = Fx * Fy with Fx = exp(-ln2 * Px^2 / w^2) and
// Fy = exp(-ln2 * Py^2 / h^2), where (Px, Py) are the pixel coordinates in
// the ellipse frame. The standard deviations w / sqrt(ln 4) and
// h / sqrt(ln 4) place the 0.5 level set exactly on the ellipse.

#include <gpl/core.hpp>
#include <gpl/parallel.hpp>

#include <cmath>
#include <map>
#include <numbers>
#include <vector>

namespace gpl {

/// Coordinates of (x, y) in the ellipse frame (major axis along +Px).
inline Point2 to_ellipse_frame(const EllipseParams& p, double x, double y) noexcept {
  const double mx = x - p.cx, my = y - p.cy;
  const double c = std::cos(p.theta), s = std::sin(p.theta);
  return {mx * c + my * s, my * c - mx * s};
}

/// Analytic heatmap value at a continuous point.
inline double heatmap_value(const EllipseParams& p, double x, double y) noexcept {
  const auto q = to_ellipse_frame(p, x, y);
  return std::exp(-std::numbers::ln2 * (q.x * q.x / (p.w * p.w) + q.y * q.y / (p.h * p.h)));
}

namespace detail {

inline void check_heatmap_args(const EllipseParams& p, std::size_t n) {
  if (n < 2) throw Error(ErrorCode::InvalidSize, "heatmap size must be at least 2, got " + std::to_string(n));
  if (!(p.w > 0.0) || !(p.h > 0.0)) throw Error(ErrorCode::NonPositiveAxis, "ellipse semi-axes must be positive");
  if (p.w < 0.5 || p.h < 0.5) {
    throw Error(ErrorCode::DegenerateEllipse, "ellipse semi-axes below 0.5 px cannot be represented on the grid");
  }
  if (!std::isfinite(p.cx) || !std::isfinite(p.cy) || !std::isfinite(p.theta)) {
    throw Error(ErrorCode::NonFiniteInput, "ellipse parameters must be finite");
  }
}

}  // namespace detail

/// n x n heatmap of the ellipse sampled at integer pixel centers.
inline HeatmapSlice generate_heatmap(const EllipseParams& params, std::size_t n) {
  detail::check_heatmap_args(params, n);
  HeatmapSlice out(n, n);
  for (std::size_t row = 0; row < n; ++row) {
    for (std::size_t col = 0; col < n; ++col) {
      out(col, row) = heatmap_value(params, static_cast<double>(col), static_cast<double>(row));
    }
  }
  return out;
}

/// Intermediate grids of the step-by-step construction: uniform coordinate
/// grids, centered grids, rotated grids and the two 1-D Gaussian factors.
struct HeatmapSteps {
  HeatmapSlice ux, uy, mx, my, px, py, fx, fy, g;
};

/// Materializes every intermediate grid. Agrees with generate_heatmap up to
/// rounding; kept for inspection and debugging.
inline HeatmapSteps generate_heatmap_steps(const EllipseParams& params, std::size_t n) {
  detail::check_heatmap_args(params, n);
  HeatmapSteps s{HeatmapSlice(n, n), HeatmapSlice(n, n), HeatmapSlice(n, n), HeatmapSlice(n, n), HeatmapSlice(n, n),
                 HeatmapSlice(n, n), HeatmapSlice(n, n), HeatmapSlice(n, n), HeatmapSlice(n, n)};
  const double c = std::cos(params.theta), sn = std::sin(params.theta);
  const double sigma_x = params.w / std::sqrt(std::log(4.0));
  const double sigma_y = params.h / std::sqrt(std::log(4.0));
  for (std::size_t row = 0; row < n; ++row) {
    for (std::size_t col = 0; col < n; ++col) {
      s.ux(col, row) = static_cast<double>(col);
      s.uy(col, row) = static_cast<double>(row);
      s.mx(col, row) = s.ux(col, row) - params.cx;
      s.my(col, row) = s.uy(col, row) - params.cy;
      s.px(col, row) = s.mx(col, row) * c + s.my(col, row) * sn;
      s.py(col, row) = s.my(col, row) * c - s.mx(col, row) * sn;
      s.fx(col, row) = std::exp(-s.px(col, row) * s.px(col, row) / (2.0 * sigma_x * sigma_x));
      s.fy(col, row) = std::exp(-s.py(col, row) * s.py(col, row) / (2.0 * sigma_y * sigma_y));
      s.g(col, row) = s.fx(col, row) * s.fy(col, row);
    }
  }
  return s;
}

/// depth x n x n pseudo-label volume; slices without a record stay zero.
inline HeatmapVolume stack_heatmaps(std::span<const EllipseRecord> records, std::size_t depth, std::size_t n,
                                    std::size_t workers = worker_count()) {
  if (n < 2) throw Error(ErrorCode::InvalidSize, "heatmap size must be at least 2, got " + std::to_string(n));
  std::vector<const EllipseRecord*> by_slice(depth, nullptr);
  for (const auto& r : records) {
    if (r.slice_index >= depth) {
      throw Error(ErrorCode::IndexOutOfRange, "record slice " + std::to_string(r.slice_index) +
                                                  " is outside a volume of depth " + std::to_string(depth));
    }
    if (by_slice[r.slice_index] != nullptr) {
      throw Error(ErrorCode::InvalidArgument, "duplicate record for slice " + std::to_string(r.slice_index));
    }
    by_slice[r.slice_index] = &r;
  }
  HeatmapVolume vol(Shape3{depth, n, n});
  parallel_for(
      depth,
      [&](std::size_t z) {
        if (by_slice[z] == nullptr) return;
        vol.set_slice(z, generate_heatmap(by_slice[z]->params, n));
      },
      workers);
  return vol;
}

/// 1 where value > t (strictly), else 0.
template <typename T>
MaskVolume threshold(const Volume<T>& v, double t = 0.5) {
  if (!(t > 0.0 && t < 1.0)) {
    throw Error(ErrorCode::OutOfRangeThreshold, "threshold must lie in (0, 1), got " + std::to_string(t));
  }
  std::vector<std::uint8_t> out(v.size());
  const auto src = v.data();
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = static_cast<double>(src[i]) > t ? 1 : 0;
  return MaskVolume(v.shape(), std::move(out), v.spacing());
}

inline MaskSlice threshold(const HeatmapSlice& s, double t = 0.5) {
  const auto vol = threshold(HeatmapVolume(Shape3{1, s.height(), s.width()},
                                           std::vector<double>(s.data().begin(), s.data().end())),
                             t);
  return vol.slice_image(0);
}

/// Voxelwise product of a heatmap and a binary mask (fine-tuning label p*s).
inline HeatmapVolume elementwise_product(const HeatmapVolume& p, const MaskVolume& s) {
  require_same_shape(p, s, "elementwise_product");
  std::vector<double> out(p.size());
  const auto pd = p.data();
  const auto sd = s.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sd[i] != 0 ? pd[i] : 0.0;
  return HeatmapVolume(p.shape(), std::move(out), p.spacing());
}

}  // namespace gpl
