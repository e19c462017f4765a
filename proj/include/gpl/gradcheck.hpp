#pragma once

// Central finite-difference checks for the loss gradients.

#include <gpl/losses.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace gpl {

struct GradCheckResult {
  /// max_i |analytic_i - numeric_i| / max(max_i |analytic_i|, max_i |numeric_i|)
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
};

/// Compares `analytic` against central differences of `loss` with step `h`.
/// Coordinates for which `skip(i)` is true are excluded (kinks).
inline GradCheckResult finite_difference_check(const std::function<double(const RealVolume&)>& loss,
                                               const RealVolume& x, std::span<const double> analytic, double h,
                                               const std::function<bool(std::size_t)>& skip = {}) {
  GradCheckResult out;
  std::vector<double> numeric(x.size(), 0.0);
  std::vector<bool> used(x.size(), false);
  std::vector<double> probe(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (skip && skip(i)) {
      ++out.skipped;
      continue;
    }
    const double orig = probe[i];
    probe[i] = orig + h;
    const double fp = loss(RealVolume(x.shape(), probe));
    probe[i] = orig - h;
    const double fm = loss(RealVolume(x.shape(), probe));
    probe[i] = orig;
    numeric[i] = (fp - fm) / (2.0 * h);
    used[i] = true;
    ++out.checked;
  }
  double scale = 0.0, worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!used[i]) continue;
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]));
  }
  out.max_relative_error = scale > 0.0 ? worst / scale : worst;
  return out;
}

namespace detail {

inline std::vector<int> gap_signs(const RealVolume& g, const RealVolume& x) {
  std::vector<int> s;
  for (const auto& axis : wasserstein_gaps(g, x)) {
    for (double v : axis) s.push_back(v > 0.0 ? 1 : v < 0.0 ? -1 : 0);
  }
  return s;
}

inline double min_abs_gap(const RealVolume& g, const RealVolume& x) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& axis : wasserstein_gaps(g, x)) {
    for (double v : axis) m = std::min(m, std::abs(v));
  }
  return m;
}

inline RealVolume random_volume(std::mt19937_64& rng, Shape3 shape) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> v(shape.count());
  for (double& e : v) e = nd(rng);
  return RealVolume(shape, std::move(v));
}

}  // namespace detail

struct GradCheckSuite {
  GradCheckResult kl, wasserstein, mae;
};

/// Checks the KL (8x8), Wasserstein (4x8x8) and MAE (16x16) gradients on
/// random inputs drawn from `seed`. Kinks are excluded: MAE coordinates
/// within `h` of equality, and Wasserstein coordinates whose perturbation
/// changes the sign of a CDF gap or where a gap is within 1e-6 of zero.
inline GradCheckSuite run_gradient_checks(std::uint64_t seed, double h = 1e-3) {
  std::mt19937_64 rng(seed);
  GradCheckSuite out;
  {
    const auto g = detail::random_volume(rng, {1, 8, 8});
    const auto x = detail::random_volume(rng, {1, 8, 8});
    const auto term = kl_loss(g, x);
    out.kl = finite_difference_check([&](const RealVolume& v) { return kl_loss(g, v).value; }, x, term.gradient, h);
  }
  {
    const auto g = detail::random_volume(rng, {4, 8, 8});
    const auto x = detail::random_volume(rng, {4, 8, 8});
    const auto term = wasserstein_loss(g, x);
    const bool near_kink = detail::min_abs_gap(g, x) < 1e-6;
    std::vector<double> probe(x.data().begin(), x.data().end());
    auto skip = [&](std::size_t i) {
      if (near_kink) return true;
      const double orig = probe[i];
      probe[i] = orig + h;
      const auto plus = detail::gap_signs(g, RealVolume(x.shape(), probe));
      probe[i] = orig - h;
      const auto minus = detail::gap_signs(g, RealVolume(x.shape(), probe));
      probe[i] = orig;
      return plus != minus;
    };
    out.wasserstein = finite_difference_check([&](const RealVolume& v) { return wasserstein_loss(g, v).value; }, x,
                                              term.gradient, h, skip);
  }
  {
    const auto g = detail::random_volume(rng, {1, 16, 16});
    const auto x = detail::random_volume(rng, {1, 16, 16});
    const auto term = mae_loss(g, x);
    auto skip = [&](std::size_t i) { return std::abs(x.data()[i] - g.data()[i]) <= h; };
    out.mae = finite_difference_check([&](const RealVolume& v) { return mae_loss(g, v).value; }, x, term.gradient, h,
                                      skip);
  }
  return out;
}

}  // namespace gpl
