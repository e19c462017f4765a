#pragma once

// Overlap, distance and volume metrics for binary segmentations. Overlap
// metrics are reported in percent.

#include <gpl/core.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace gpl {

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::size_t total() const noexcept { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

inline ConfusionCounts confusion(const MaskVolume& pred, const MaskVolume& gt) {
  require_same_shape(pred, gt, "confusion");
  ConfusionCounts c;
  const auto p = pred.data();
  const auto g = gt.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool pi = p[i] != 0, gi = g[i] != 0;
    if (pi && gi) ++c.tp;
    else if (pi) ++c.fp;
    else if (gi) ++c.fn;
    else ++c.tn;
  }
  return c;
}

/// 100 * 2TP / (2TP + FP + FN); 100 when both volumes are empty.
inline double dice(const MaskVolume& pred, const MaskVolume& gt) {
  const auto c = confusion(pred, gt);
  const std::size_t denom = 2 * c.tp + c.fp + c.fn;
  if (denom == 0) return 100.0;
  return 100.0 * 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

inline double sensitivity(const MaskVolume& pred, const MaskVolume& gt) {
  const auto c = confusion(pred, gt);
  if (c.tp + c.fn == 0) throw Error(ErrorCode::EmptyGroundTruth, "sensitivity is undefined for an empty ground truth");
  return 100.0 * static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

inline double volumetric_similarity(const MaskVolume& pred, const MaskVolume& gt) {
  require_same_shape(pred, gt, "volumetric_similarity");
  const auto np = static_cast<double>(count_foreground(pred.data()));
  const auto ng = static_cast<double>(count_foreground(gt.data()));
  if (np + ng == 0.0) throw Error(ErrorCode::BothEmpty, "volumetric similarity is undefined for two empty volumes");
  return 100.0 * (1.0 - std::abs(np - ng) / (np + ng));
}

struct Voxel {
  std::size_t z = 0, y = 0, x = 0;
  friend bool operator==(const Voxel&, const Voxel&) = default;
};

/// Foreground voxels with at least one background 6-neighbor (outside the
/// volume counts as background), in (z, y, x) order.
inline std::vector<Voxel> boundary_voxels(const MaskVolume& v) {
  const Shape3& s = v.shape();
  auto fg = [&](std::ptrdiff_t z, std::ptrdiff_t y, std::ptrdiff_t x) {
    if (z < 0 || y < 0 || x < 0 || z >= static_cast<std::ptrdiff_t>(s.depth) ||
        y >= static_cast<std::ptrdiff_t>(s.height) || x >= static_cast<std::ptrdiff_t>(s.width)) {
      return false;
    }
    return v(static_cast<std::size_t>(z), static_cast<std::size_t>(y), static_cast<std::size_t>(x)) != 0;
  };
  std::vector<Voxel> out;
  for (std::size_t z = 0; z < s.depth; ++z) {
    for (std::size_t y = 0; y < s.height; ++y) {
      for (std::size_t x = 0; x < s.width; ++x) {
        if (v(z, y, x) == 0) continue;
        const auto zi = static_cast<std::ptrdiff_t>(z), yi = static_cast<std::ptrdiff_t>(y),
                   xi = static_cast<std::ptrdiff_t>(x);
        if (!fg(zi - 1, yi, xi) || !fg(zi + 1, yi, xi) || !fg(zi, yi - 1, xi) || !fg(zi, yi + 1, xi) ||
            !fg(zi, yi, xi - 1) || !fg(zi, yi, xi + 1)) {
          out.push_back({z, y, x});
        }
      }
    }
  }
  return out;
}

namespace detail {

struct Scaled {
  double z, y, x;
};

inline std::vector<Scaled> scale_points(const std::vector<Voxel>& pts, const Spacing& sp) {
  std::vector<Scaled> out;
  out.reserve(pts.size());
  for (const auto& p : pts) {
    out.push_back({static_cast<double>(p.z) * sp.sz, static_cast<double>(p.y) * sp.sy, static_cast<double>(p.x) * sp.sx});
  }
  return out;
}

inline double sq_dist(const Scaled& a, const Scaled& b) noexcept {
  const double dz = a.z - b.z, dy = a.y - b.y, dx = a.x - b.x;
  return dz * dz + dy * dy + dx * dx;
}

/// Directed squared Hausdorff distance max_a min_b |a - b|^2 with early
/// break: the inner scan stops as soon as a point closer than the current
/// maximum is found, since `a` can then no longer raise the maximum.
inline double directed_sq_hausdorff(const std::vector<Scaled>& from, const std::vector<Scaled>& to) {
  double cmax = 0.0;
  for (const auto& a : from) {
    double cmin = std::numeric_limits<double>::infinity();
    for (const auto& b : to) {
      const double d = sq_dist(a, b);
      if (d < cmax) {
        cmin = d;
        break;
      }
      cmin = std::min(cmin, d);
    }
    cmax = std::max(cmax, cmin);
  }
  return cmax;
}

}  // namespace detail

/// Symmetric maximum Hausdorff distance between the boundary voxel sets,
/// with physical spacing applied per axis.
inline double hausdorff(const MaskVolume& pred, const MaskVolume& gt, const Spacing& spacing = {}) {
  require_same_shape(pred, gt, "hausdorff");
  const auto bp = boundary_voxels(pred);
  const auto bg = boundary_voxels(gt);
  if (bp.empty() || bg.empty()) throw Error(ErrorCode::EmptyVolume, "Hausdorff distance needs two non-empty volumes");
  const auto sp = detail::scale_points(bp, spacing);
  const auto sg = detail::scale_points(bg, spacing);
  return std::sqrt(std::max(detail::directed_sq_hausdorff(sp, sg), detail::directed_sq_hausdorff(sg, sp)));
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
  std::size_t count = 0;
};

/// Mean and sample (n - 1) standard deviation; std is 0 for fewer than two
/// values.
inline MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  out.count = values.size();
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

/// Per-case Dice between two annotation sets, summarized as mean and
/// sample standard deviation.
inline MeanStd variability(std::span<const MaskVolume> a, std::span<const MaskVolume> b,
                           std::vector<double>* per_case = nullptr) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::LengthMismatch, "label lists have " + std::to_string(a.size()) + " and " +
                                               std::to_string(b.size()) + " cases");
  }
  std::vector<double> d;
  d.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d.push_back(dice(a[i], b[i]));
  if (per_case != nullptr) *per_case = d;
  return mean_std(d);
}

/// One evaluated case. Undefined metrics (sensitivity with an empty ground
/// truth, distances with an empty volume) are left empty.
struct CaseMetrics {
  std::string case_id;
  double dsc = 0.0;
  std::optional<double> sen;
  std::optional<double> hd;
  std::optional<double> vs;
};

struct EvalReport {
  std::vector<CaseMetrics> per_case;
  MeanStd dsc, sen, hd, vs;
};

inline CaseMetrics evaluate_case(std::string case_id, const MaskVolume& pred, const MaskVolume& gt,
                                 const Spacing& spacing = {}) {
  require_same_shape(pred, gt, "evaluate");
  CaseMetrics m;
  m.case_id = std::move(case_id);
  m.dsc = dice(pred, gt);
  const auto np = count_foreground(pred.data());
  const auto ng = count_foreground(gt.data());
  if (ng > 0) m.sen = sensitivity(pred, gt);
  if (np > 0 && ng > 0) m.hd = hausdorff(pred, gt, spacing);
  else if (np == 0 && ng == 0) m.hd = 0.0;
  if (np + ng > 0) m.vs = volumetric_similarity(pred, gt);
  return m;
}

/// Aggregates in case order; undefined entries are skipped.
inline EvalReport aggregate(std::vector<CaseMetrics> cases) {
  EvalReport r;
  std::vector<double> dsc, sen, hd, vs;
  for (const auto& c : cases) {
    dsc.push_back(c.dsc);
    if (c.sen) sen.push_back(*c.sen);
    if (c.hd) hd.push_back(*c.hd);
    if (c.vs) vs.push_back(*c.vs);
  }
  r.dsc = mean_std(dsc);
  r.sen = mean_std(sen);
  r.hd = mean_std(hd);
  r.vs = mean_std(vs);
  r.per_case = std::move(cases);
  return r;
}

}  // namespace gpl
