#pragma once

// Synthetic aorta-like phantoms: a stack of drifting ellipses, the matching
// Gaussian pseudo labels, and "strong" masks whose boundary deviates from
// the ellipse by a smooth radial perturbation.

#include <gpl/core.hpp>
#include <gpl/heatmap.hpp>
#include <gpl/parallel.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace gpl {

struct AneurysmBulge {
  double factor = 1.8;
  std::size_t first_slice = 6;
  std::size_t last_slice = 10;  // inclusive
};

struct PhantomSpec {
  std::uint64_t seed = 42;
  std::size_t depth = 16;
  std::size_t size = 256;
  /// Maximum center displacement per slice, px.
  double drift = 1.0;
  double axis_min = 20.0;
  double axis_max = 45.0;
  /// Upper bound on semi_minor / semi_major, keeps orientations well defined.
  double max_axis_ratio = 0.8;
  std::optional<AneurysmBulge> bulge;
  /// Peak radial deviation of the strong-mask boundary, px.
  double perturbation = 0.0;

  void validate() const {
    auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidSpec, what); };
    if (depth == 0) bad("depth must be positive");
    if (size < 8) bad("size must be at least 8");
    if (!(drift >= 0.0) || !std::isfinite(drift)) bad("drift must be non-negative");
    if (!(axis_min >= 2.0)) bad("axis_min must be at least 2 px");
    if (!(axis_max >= axis_min) || !std::isfinite(axis_max)) bad("axis_max must be >= axis_min");
    if (!(max_axis_ratio > 0.0 && max_axis_ratio <= 1.0)) bad("max_axis_ratio must lie in (0, 1]");
    if (axis_min > axis_max * max_axis_ratio) bad("axis range cannot satisfy max_axis_ratio");
    if (!(perturbation >= 0.0) || !std::isfinite(perturbation)) bad("perturbation must be non-negative");
    if (perturbation >= axis_min) bad("perturbation must be smaller than axis_min");
    if (bulge) {
      if (!(bulge->factor > 0.0) || !std::isfinite(bulge->factor)) bad("bulge factor must be positive");
      if (bulge->first_slice > bulge->last_slice || bulge->last_slice >= depth) bad("bulge slices out of range");
    }
    if (2.0 * margin() + 1.0 > static_cast<double>(size)) bad("ellipses do not fit in the grid");
  }

  /// Distance from the grid edge that every center keeps.
  double margin() const {
    const double grow = bulge ? std::max(1.0, bulge->factor) : 1.0;
    return axis_max * grow + perturbation + 2.0;
  }
};

/// Smooth radial boundary offset, |offset| <= amplitude.
struct RadialPerturbation {
  double amplitude = 0.0;
  double phase3 = 0.0;
  double phase5 = 0.0;

  double operator()(double angle) const noexcept {
    return amplitude * (0.6 * std::sin(3.0 * angle + phase3) + 0.4 * std::sin(5.0 * angle + phase5));
  }
};

struct Phantom {
  std::vector<EllipseRecord> records;
  MaskVolume strong;
  HeatmapVolume pseudo;
};

namespace detail {

/// Uniform double in [0, 1) from the top 53 bits; independent of the
/// standard library's distribution implementations.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * unit_uniform(rng); }

}  // namespace detail

/// Center-inclusion rasterization of the ellipse, with the boundary moved
/// radially by `perturb` (px, as a function of the ellipse parameter angle).
inline MaskSlice rasterize_ellipse(const EllipseParams& p, std::size_t width, std::size_t height,
                                   const RadialPerturbation& perturb = {}) {
  MaskSlice out(width, height);
  for (std::size_t row = 0; row < height; ++row) {
    for (std::size_t col = 0; col < width; ++col) {
      const auto q = to_ellipse_frame(p, static_cast<double>(col), static_cast<double>(row));
      const double u = q.x / p.w, v = q.y / p.h;
      const double rho = std::sqrt(u * u + v * v);
      bool inside = rho <= 1.0;
      if (perturb.amplitude > 0.0) {
        const double t = std::atan2(v, u);
        const double ct = std::cos(t), st = std::sin(t);
        const double radius = std::sqrt(p.w * p.w * ct * ct + p.h * p.h * st * st);
        inside = rho * radius <= radius + perturb(t);
      }
      out(col, row) = inside ? 1 : 0;
    }
  }
  return out;
}

inline Phantom generate_phantom(const PhantomSpec& spec, std::size_t workers = worker_count()) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const double n = static_cast<double>(spec.size);
  const double margin = spec.margin();
  const double lo = margin, hi = n - 1.0 - margin;

  double cx = detail::uniform(rng, std::max(lo, 0.45 * n), std::min(hi, 0.55 * n));
  double cy = detail::uniform(rng, std::max(lo, 0.45 * n), std::min(hi, 0.55 * n));
  double h = detail::uniform(rng, spec.axis_min, spec.axis_max * spec.max_axis_ratio);
  double w = detail::uniform(rng, h / spec.max_axis_ratio, spec.axis_max);
  double theta = detail::uniform(rng, -kHalfPi, kHalfPi);

  Phantom out;
  std::vector<RadialPerturbation> perturb(spec.depth);
  for (std::size_t z = 0; z < spec.depth; ++z) {
    if (z > 0) {
      cx = std::clamp(cx + spec.drift * detail::uniform(rng, -1.0, 1.0), lo, hi);
      cy = std::clamp(cy + spec.drift * detail::uniform(rng, -1.0, 1.0), lo, hi);
      w = std::clamp(w * std::exp(0.03 * detail::uniform(rng, -1.0, 1.0)), spec.axis_min, spec.axis_max);
      h = std::clamp(h * std::exp(0.03 * detail::uniform(rng, -1.0, 1.0)), spec.axis_min, spec.axis_max);
      if (h > spec.max_axis_ratio * w) {
        // Restore the aspect bound without leaving the axis range.
        w = std::min(spec.axis_max, h / spec.max_axis_ratio);
        h = std::min(h, spec.max_axis_ratio * w);
      }
      theta += 0.05 * detail::uniform(rng, -1.0, 1.0);
    }
    perturb[z] = {spec.perturbation, detail::uniform(rng, 0.0, 2.0 * kPi), detail::uniform(rng, 0.0, 2.0 * kPi)};
    double scale = 1.0;
    if (spec.bulge && z >= spec.bulge->first_slice && z <= spec.bulge->last_slice) scale = spec.bulge->factor;
    out.records.push_back({z, canonicalize_ellipse(cx, cy, w * scale, h * scale, theta)});
  }

  out.strong = MaskVolume(Shape3{spec.depth, spec.size, spec.size});
  parallel_for(
      spec.depth,
      [&](std::size_t z) {
        out.strong.set_slice(z, rasterize_ellipse(out.records[z].params, spec.size, spec.size, perturb[z]));
      },
      workers);
  out.pseudo = stack_heatmaps(out.records, spec.depth, spec.size, workers);
  return out;
}

}  // namespace gpl
