#pragma once

// Ellipse fitting for annotated ellipse-like regions.
//
// The fit is the ellipse-specific direct least-squares method in its
// numerically stable block form: the design matrix is split into quadratic
// and linear parts, the linear part is eliminated, and the remaining 3x3
// eigenproblem is solved under the constraint 4ac - b^2 > 0.

#include <gpl/core.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace gpl {

using PointSet = std::vector<Point2>;

/// Centers of foreground pixels with at least one background 4-neighbor.
/// Pixels outside the image count as background. Ordered by (row, column).
inline PointSet extract_boundary(const MaskSlice& mask) {
  const std::size_t w = mask.width(), h = mask.height();
  PointSet out;
  auto fg = [&](std::ptrdiff_t c, std::ptrdiff_t r) {
    if (c < 0 || r < 0 || c >= static_cast<std::ptrdiff_t>(w) || r >= static_cast<std::ptrdiff_t>(h)) return false;
    return mask(static_cast<std::size_t>(c), static_cast<std::size_t>(r)) != 0;
  };
  bool any = false;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      if (mask(c, r) == 0) continue;
      any = true;
      const auto ci = static_cast<std::ptrdiff_t>(c), ri = static_cast<std::ptrdiff_t>(r);
      if (!fg(ci - 1, ri) || !fg(ci + 1, ri) || !fg(ci, ri - 1) || !fg(ci, ri + 1)) {
        out.push_back({static_cast<double>(c), static_cast<double>(r)});
      }
    }
  }
  if (!any) throw Error(ErrorCode::EmptyMask, "mask has no foreground pixels");
  return out;
}

/// Midpoints of the pixel edges separating foreground from background
/// (4-neighbor cracks), ordered by (row, column, neighbor). Unlike the pixel
/// centers returned by extract_boundary, these points are not biased towards
/// the inside of the region, which matters for small ellipses.
inline PointSet extract_boundary_cracks(const MaskSlice& mask) {
  const std::size_t w = mask.width(), h = mask.height();
  PointSet out;
  auto fg = [&](std::ptrdiff_t c, std::ptrdiff_t r) {
    if (c < 0 || r < 0 || c >= static_cast<std::ptrdiff_t>(w) || r >= static_cast<std::ptrdiff_t>(h)) return false;
    return mask(static_cast<std::size_t>(c), static_cast<std::size_t>(r)) != 0;
  };
  constexpr std::ptrdiff_t dc[4] = {0, -1, 1, 0};
  constexpr std::ptrdiff_t dr[4] = {-1, 0, 0, 1};
  bool any = false;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      if (mask(c, r) == 0) continue;
      any = true;
      const auto ci = static_cast<std::ptrdiff_t>(c), ri = static_cast<std::ptrdiff_t>(r);
      for (int k = 0; k < 4; ++k) {
        if (!fg(ci + dc[k], ri + dr[k])) {
          out.push_back({static_cast<double>(c) + 0.5 * static_cast<double>(dc[k]),
                         static_cast<double>(r) + 0.5 * static_cast<double>(dr[k])});
        }
      }
    }
  }
  if (!any) throw Error(ErrorCode::EmptyMask, "mask has no foreground pixels");
  return out;
}

/// Number of 8-connected foreground components.
inline std::size_t count_components(const MaskSlice& mask) {
  const std::size_t w = mask.width(), h = mask.height();
  std::vector<std::uint8_t> seen(w * h, 0);
  std::vector<std::size_t> stack;
  std::size_t components = 0;
  for (std::size_t start = 0; start < w * h; ++start) {
    if (mask.data()[start] == 0 || seen[start]) continue;
    ++components;
    seen[start] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t idx = stack.back();
      stack.pop_back();
      const auto r = static_cast<std::ptrdiff_t>(idx / w), c = static_cast<std::ptrdiff_t>(idx % w);
      for (std::ptrdiff_t dr = -1; dr <= 1; ++dr) {
        for (std::ptrdiff_t dc = -1; dc <= 1; ++dc) {
          const std::ptrdiff_t rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= static_cast<std::ptrdiff_t>(h) || cc >= static_cast<std::ptrdiff_t>(w)) continue;
          const auto n = static_cast<std::size_t>(rr) * w + static_cast<std::size_t>(cc);
          if (mask.data()[n] != 0 && !seen[n]) {
            seen[n] = 1;
            stack.push_back(n);
          }
        }
      }
    }
  }
  return components;
}

namespace detail {

/// Raw (un-gauged) conic fitted to points in normalized coordinates
/// u = (x - mx) / scale, v = (y - my) / scale.
struct NormalizedConic {
  std::array<double, 6> coef{};
  double mx = 0.0, my = 0.0, scale = 1.0;
};

inline NormalizedConic fit_conic_normalized(std::span<const Point2> points) {
  const std::size_t n = points.size();
  if (n < 6) {
    throw Error(ErrorCode::DegenerateInput, "ellipse fitting needs at least 6 points, got " + std::to_string(n));
  }
  NormalizedConic out;
  for (const auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw Error(ErrorCode::NonFiniteInput, "non-finite point");
    out.mx += p.x;
    out.my += p.y;
  }
  out.mx /= static_cast<double>(n);
  out.my /= static_cast<double>(n);

  // Second moments of the centered cloud; a vanishing minor eigenvalue means
  // the points are (nearly) collinear.
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : points) {
    const double dx = p.x - out.mx, dy = p.y - out.my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  sxx /= static_cast<double>(n);
  sxy /= static_cast<double>(n);
  syy /= static_cast<double>(n);
  const double tr = sxx + syy;
  const double det = sxx * syy - sxy * sxy;
  const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
  const double lmin = 0.5 * tr - disc;
  if (!(tr > 0.0) || lmin <= 1e-12 * tr) {
    throw Error(ErrorCode::DegenerateInput, "points are collinear or coincident");
  }
  out.scale = std::sqrt(tr / 2.0);

  Eigen::Matrix3d s1 = Eigen::Matrix3d::Zero(), s2 = Eigen::Matrix3d::Zero(), s3 = Eigen::Matrix3d::Zero();
  for (const auto& p : points) {
    const double u = (p.x - out.mx) / out.scale, v = (p.y - out.my) / out.scale;
    const Eigen::Vector3d q(u * u, u * v, v * v);
    const Eigen::Vector3d l(u, v, 1.0);
    s1.noalias() += q * q.transpose();
    s2.noalias() += q * l.transpose();
    s3.noalias() += l * l.transpose();
  }

  Eigen::FullPivLU<Eigen::Matrix3d> s3_lu(s3);
  s3_lu.setThreshold(1e-12);
  if (!s3_lu.isInvertible()) throw Error(ErrorCode::DegenerateInput, "linear scatter matrix is singular");
  const Eigen::Matrix3d t = -s3_lu.solve(s2.transpose());
  const Eigen::Matrix3d reduced = s1 + s2 * t;
  // C1^-1 for C1 = [[0,0,2],[0,-1,0],[2,0,0]].
  Eigen::Matrix3d c1_inv;
  c1_inv << 0.0, 0.0, 0.5, 0.0, -1.0, 0.0, 0.5, 0.0, 0.0;
  const Eigen::Matrix3d m = c1_inv * reduced;

  Eigen::EigenSolver<Eigen::Matrix3d> solver(m);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::NoEllipseSolution, "eigen decomposition failed");
  const auto vectors = solver.eigenvectors();

  std::optional<Eigen::Vector3d> best;
  double best_cond = 0.0;
  for (int k = 0; k < 3; ++k) {
    const auto col = vectors.col(k);
    const double imag = col.imag().norm();
    if (imag > 1e-9 * std::max(1.0, col.real().norm())) continue;
    Eigen::Vector3d a1 = col.real();
    a1.normalize();
    const double cond = 4.0 * a1[0] * a1[2] - a1[1] * a1[1];
    if (cond > 0.0 && (!best || cond > best_cond)) {
      best = a1;
      best_cond = cond;
    }
  }
  if (!best) throw Error(ErrorCode::NoEllipseSolution, "no eigenvector satisfies the ellipse constraint");
  const Eigen::Vector3d a2 = t * *best;
  out.coef = {(*best)[0], (*best)[1], (*best)[2], a2[0], a2[1], a2[2]};
  return out;
}

/// Maps conic coefficients from normalized (u, v) to image (x, y) coordinates.
inline std::array<double, 6> denormalize_conic(const NormalizedConic& nc) {
  const auto [A, B, C, D, E, F] = nc.coef;
  const double s = nc.scale, mx = nc.mx, my = nc.my;
  // First undo the scaling: conic in centered coordinates (x - mx, y - my).
  const double a = A / (s * s), b = B / (s * s), c = C / (s * s), d0 = D / s, e0 = E / s;
  // Then undo the translation.
  const double d = d0 - 2.0 * a * mx - b * my;
  const double e = e0 - 2.0 * c * my - b * mx;
  const double f = F + a * mx * mx + b * mx * my + c * my * my - d0 * mx - e0 * my;
  return {a, b, c, d, e, f};
}

/// Geometric parameters from raw coefficients; center is expressed in the
/// coordinates of the conic.
inline EllipseParams conic_params_raw(std::array<double, 6> v) {
  double big = 0.0;
  for (double x : v) big = std::max(big, std::abs(x));
  if (!(big > 0.0) || !std::isfinite(big)) throw Error(ErrorCode::NotAnEllipse, "invalid conic coefficients");
  for (double& x : v) x /= big;
  if (v[0] < 0.0) {
    for (double& x : v) x = -x;
  }
  const auto [a, b, c, d, e, f] = v;
  const double disc = b * b - 4.0 * a * c;
  if (!(disc < 0.0)) throw Error(ErrorCode::NotAnEllipse, "conic discriminant b^2 - 4ac is not negative");

  // Center solves [2a b; b 2c] [cx; cy] = -[d; e].
  const double det = 4.0 * a * c - b * b;
  const double cx = (b * e - 2.0 * c * d) / det;
  const double cy = (b * d - 2.0 * a * e) / det;
  const double f_center = f + 0.5 * (d * cx + e * cy);

  // Eigenvalues of [[a, b/2], [b/2, c]].
  const double mean = 0.5 * (a + c);
  const double radius = std::hypot(0.5 * (a - c), 0.5 * b);
  const double lambda_large = mean + radius;
  const double lambda_small = mean - radius;
  if (!(lambda_small > 0.0)) throw Error(ErrorCode::NotAnEllipse, "quadratic form is not positive definite");
  const double major_sq = -f_center / lambda_small;
  const double minor_sq = -f_center / lambda_large;
  if (!(minor_sq > 0.0) || !(major_sq > 0.0)) {
    throw Error(ErrorCode::ImaginaryEllipse, "conic has no real points");
  }
  // 0.5 * atan2(b, a - c) is the direction of the large-eigenvalue
  // eigenvector, i.e. the minor axis. Passing the minor axis first lets
  // canonicalization rotate the angle onto the major axis.
  const double minor_dir = 0.5 * std::atan2(b, a - c);
  return canonicalize_ellipse(cx, cy, std::sqrt(minor_sq), std::sqrt(major_sq), minor_dir);
}

}  // namespace detail

/// Ellipse-specific direct least-squares conic fit.
inline ConicCoefficients fit_conic(std::span<const Point2> points) {
  const auto nc = detail::fit_conic_normalized(points);
  const auto v = detail::denormalize_conic(nc);
  return ConicCoefficients(v[0], v[1], v[2], v[3], v[4], v[5]);
}

/// Center, semi-axes and orientation of the ellipse described by `c`.
inline EllipseParams conic_to_params(const ConicCoefficients& c) {
  return detail::conic_params_raw(c.values());
}

/// Overload for coefficients not yet in gauge form.
inline EllipseParams conic_to_params(double a, double b, double c, double d, double e, double f) {
  return detail::conic_params_raw({a, b, c, d, e, f});
}

/// Fits an ellipse to a point set. The geometric parameters are computed in
/// the centered frame and shifted back, which keeps the center exact under
/// translation of the input.
inline EllipseParams fit_ellipse_points(std::span<const Point2> points) {
  const auto nc = detail::fit_conic_normalized(points);
  auto p = detail::conic_params_raw(nc.coef);
  p.cx = p.cx * nc.scale + nc.mx;
  p.cy = p.cy * nc.scale + nc.my;
  p.w *= nc.scale;
  p.h *= nc.scale;
  return p;
}

/// Boundary extraction, conic fit and parameter recovery for one mask.
inline EllipseParams fit_ellipse(const MaskSlice& mask) {
  const auto points = extract_boundary_cracks(mask);
  return fit_ellipse_points(points);
}

}  // namespace gpl
