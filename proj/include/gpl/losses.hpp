#pragma once

// Training losses for heatmap pseudo labels, with analytic gradients with
// respect to the prediction.
//
//   distribution term: KL(softmax(g) || softmax(x)) per slice (2-D mode), or
//                      the sum over the three axes of the 1-D Wasserstein-1
//                      distance between the axis marginals of softmax(g) and
//                      softmax(x) (3-D mode)
//   reconstruction:    mean absolute error
//   total:             w1 * distribution + w2 * reconstruction
//
// All reductions run in fixed index order.

#include <gpl/core.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace gpl {

using RealVolume = Volume<double>;

struct LossWeights {
  double w1 = 1.0;
  double w2 = 1.0;

  void validate() const {
    if (!(w1 >= 0.0) || !(w2 >= 0.0) || !std::isfinite(w1) || !std::isfinite(w2)) {
      throw Error(ErrorCode::InvalidArgument, "loss weights must be finite and non-negative");
    }
    if (w1 == 0.0 && w2 == 0.0) throw Error(ErrorCode::InvalidArgument, "loss weights must not both be zero");
  }
};

struct LossValue {
  double total = 0.0;
  double distribution_term = 0.0;
  double reconstruction_term = 0.0;
};

/// A scalar loss term and its gradient with respect to the prediction.
struct LossTerm {
  double value = 0.0;
  std::vector<double> gradient;
};

enum class LossMode { KL2D, Wasserstein3D };

namespace detail {

inline double max_finite(std::span<const double> x) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "softmax input contains a non-finite value");
    m = std::max(m, v);
  }
  return m;
}

inline void require_same_size(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": element counts " + std::to_string(a.size()) +
                                              " and " + std::to_string(b.size()) + " differ");
  }
}

}  // namespace detail

/// Max-shifted softmax over all elements.
inline std::vector<double> softmax_map(std::span<const double> x) {
  if (x.empty()) throw Error(ErrorCode::InvalidSize, "softmax of an empty map");
  const double m = detail::max_finite(x);
  std::vector<double> out(x.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - m);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

/// log of softmax_map, computed without forming the probabilities first.
inline std::vector<double> log_softmax(std::span<const double> x) {
  if (x.empty()) throw Error(ErrorCode::InvalidSize, "softmax of an empty map");
  const double m = detail::max_finite(x);
  double sum = 0.0;
  for (double v : x) sum += std::exp(v - m);
  const double log_z = m + std::log(sum);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - log_z;
  return out;
}

/// KL(softmax(g) || softmax(x)) summed over the map; gradient is
/// softmax(x) - softmax(g).
inline LossTerm kl_loss(std::span<const double> g, std::span<const double> x) {
  detail::require_same_size(g, x, "kl_loss");
  const auto log_pg = log_softmax(g);
  const auto log_px = log_softmax(x);
  LossTerm out;
  out.gradient.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double pg = std::exp(log_pg[i]);
    out.value += pg * (log_pg[i] - log_px[i]);
    out.gradient[i] = std::exp(log_px[i]) - pg;
  }
  // Gibbs: rounding can only push an exact zero slightly negative.
  out.value = std::max(out.value, 0.0);
  return out;
}

/// Per-slice KL averaged over the slices of a volume.
inline LossTerm kl_loss(const RealVolume& g, const RealVolume& x) {
  require_same_shape(g, x, "kl_loss");
  LossTerm out;
  out.gradient.assign(x.size(), 0.0);
  const std::size_t depth = x.depth();
  if (depth == 0) throw Error(ErrorCode::InvalidSize, "kl_loss of an empty volume");
  const std::size_t per = x.shape().slice_count();
  for (std::size_t z = 0; z < depth; ++z) {
    auto term = kl_loss(g.slice(z), x.slice(z));
    out.value += term.value;
    for (std::size_t i = 0; i < per; ++i) out.gradient[z * per + i] = term.gradient[i] / static_cast<double>(depth);
  }
  out.value /= static_cast<double>(depth);
  return out;
}

/// Mean absolute error; gradient sign(x - g) / t with 0 at ties.
inline LossTerm mae_loss(std::span<const double> g, std::span<const double> x) {
  detail::require_same_size(g, x, "mae_loss");
  if (x.empty()) throw Error(ErrorCode::InvalidSize, "mae_loss of an empty map");
  const double t = static_cast<double>(x.size());
  LossTerm out;
  out.gradient.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double diff = x[i] - g[i];
    out.value += std::abs(diff);
    out.gradient[i] = (diff > 0.0 ? 1.0 : diff < 0.0 ? -1.0 : 0.0) / t;
  }
  out.value /= t;
  return out;
}

inline LossTerm mae_loss(const RealVolume& g, const RealVolume& x) {
  require_same_shape(g, x, "mae_loss");
  return mae_loss(g.data(), x.data());
}

namespace detail {

/// Axis marginals of a probability volume: [0] over z, [1] over y, [2] over x.
inline std::array<std::vector<double>, 3> marginals(const Shape3& s, std::span<const double> p) {
  std::array<std::vector<double>, 3> m{std::vector<double>(s.depth, 0.0), std::vector<double>(s.height, 0.0),
                                       std::vector<double>(s.width, 0.0)};
  std::size_t i = 0;
  for (std::size_t z = 0; z < s.depth; ++z) {
    for (std::size_t y = 0; y < s.height; ++y) {
      for (std::size_t x = 0; x < s.width; ++x, ++i) {
        m[0][z] += p[i];
        m[1][y] += p[i];
        m[2][x] += p[i];
      }
    }
  }
  return m;
}

}  // namespace detail

/// CDF differences CDF_x(j) - CDF_g(j) for each axis, j = 0 .. n-2. The last
/// index is omitted because both CDFs equal 1 there.
inline std::array<std::vector<double>, 3> wasserstein_gaps(const RealVolume& g, const RealVolume& x) {
  require_same_shape(g, x, "wasserstein_loss");
  const auto mg = detail::marginals(g.shape(), softmax_map(g.data()));
  const auto mx = detail::marginals(x.shape(), softmax_map(x.data()));
  std::array<std::vector<double>, 3> gaps;
  for (int k = 0; k < 3; ++k) {
    const std::size_t n = mx[k].size();
    double cg = 0.0, cx = 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
      cg += mg[k][j];
      cx += mx[k][j];
      gaps[k].push_back(cx - cg);
    }
  }
  return gaps;
}

/// Sum over the z, y and x axes of the 1-D Wasserstein-1 distance between
/// the axis marginals of softmax(g) and softmax(x), in index units.
inline LossTerm wasserstein_loss(const RealVolume& g, const RealVolume& x) {
  require_same_shape(g, x, "wasserstein_loss");
  if (x.size() == 0) throw Error(ErrorCode::InvalidSize, "wasserstein_loss of an empty volume");
  const Shape3& s = x.shape();
  const auto px = softmax_map(x.data());
  const auto gaps = wasserstein_gaps(g, x);

  LossTerm out;
  // dL/dm_x(i) = sum_{j >= i} sign(gap_j), built as a suffix sum.
  std::array<std::vector<double>, 3> dmarg;
  for (int k = 0; k < 3; ++k) {
    const std::size_t n = gaps[k].size() + 1;
    dmarg[k].assign(n, 0.0);
    double suffix = 0.0;
    for (std::size_t j = n - 1; j-- > 0;) {
      const double gap = gaps[k][j];
      suffix += gap > 0.0 ? 1.0 : gap < 0.0 ? -1.0 : 0.0;
      dmarg[k][j] = suffix;
    }
    for (double gap : gaps[k]) out.value += std::abs(gap);
  }

  // Back through the marginal sums, then the softmax Jacobian.
  std::vector<double> dp(x.size());
  double weighted = 0.0;
  std::size_t i = 0;
  for (std::size_t z = 0; z < s.depth; ++z) {
    for (std::size_t y = 0; y < s.height; ++y) {
      for (std::size_t xx = 0; xx < s.width; ++xx, ++i) {
        dp[i] = dmarg[0][z] + dmarg[1][y] + dmarg[2][xx];
        weighted += px[i] * dp[i];
      }
    }
  }
  out.gradient.resize(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out.gradient[j] = px[j] * (dp[j] - weighted);
  return out;
}

struct CombinedLoss {
  LossValue value;
  std::vector<double> gradient;
};

/// w1 * distribution + w2 * MAE with the summed gradient.
inline CombinedLoss combined_loss(const RealVolume& g, const RealVolume& x, const LossWeights& weights,
                                  LossMode mode) {
  weights.validate();
  require_same_shape(g, x, "combined_loss");
  const LossTerm dist = mode == LossMode::KL2D ? kl_loss(g, x) : wasserstein_loss(g, x);
  const LossTerm rec = mae_loss(g, x);
  CombinedLoss out;
  out.value.distribution_term = dist.value;
  out.value.reconstruction_term = rec.value;
  out.value.total = weights.w1 * dist.value + weights.w2 * rec.value;
  out.gradient.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.gradient[i] = weights.w1 * dist.gradient[i] + weights.w2 * rec.gradient[i];
  }
  return out;
}

struct DescentOptions {
  LossWeights weights{};
  /// Halve the step and retry whenever a step would increase the loss.
  bool halve_on_increase = true;
  int max_halvings = 60;
};

struct DescentResult {
  RealVolume x;
  double initial_loss = 0.0;
  /// Combined loss after each step.
  std::vector<double> trace;
  double final_lr = 0.0;
};

/// Plain gradient descent on the combined loss starting from x = 0.
inline DescentResult recover_by_descent(const RealVolume& g, LossMode mode, int steps, double lr,
                                        const DescentOptions& options = {}) {
  if (steps < 1) throw Error(ErrorCode::InvalidArgument, "descent needs at least one step");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
  options.weights.validate();

  DescentResult out;
  out.x = RealVolume(g.shape(), 0.0, g.spacing());
  auto current = combined_loss(g, out.x, options.weights, mode);
  if (!std::isfinite(current.value.total)) throw Error(ErrorCode::NonFiniteLoss, "initial loss is not finite");
  out.initial_loss = current.value.total;
  out.trace.reserve(static_cast<std::size_t>(steps));

  std::vector<double> candidate(g.size());
  for (int step = 0; step < steps; ++step) {
    int halvings = 0;
    while (true) {
      const auto xd = out.x.data();
      for (std::size_t i = 0; i < candidate.size(); ++i) candidate[i] = xd[i] - lr * current.gradient[i];
      RealVolume next(g.shape(), candidate, g.spacing());
      auto next_loss = combined_loss(g, next, options.weights, mode);
      const bool finite = std::isfinite(next_loss.value.total);
      if (!options.halve_on_increase) {
        if (!finite) {
          throw Error(ErrorCode::NonFiniteLoss, "loss became non-finite at step " + std::to_string(step) +
                                                    "; the learning rate is too large");
        }
        out.x = std::move(next);
        current = std::move(next_loss);
        break;
      }
      if (finite && next_loss.value.total <= current.value.total) {
        out.x = std::move(next);
        current = std::move(next_loss);
        break;
      }
      if (++halvings > options.max_halvings) break;  // stationary: keep x
      lr *= 0.5;
    }
    out.trace.push_back(current.value.total);
  }
  out.final_lr = lr;
  return out;
}

}  // namespace gpl
