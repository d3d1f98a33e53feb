// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ctxtraj/error.hpp"
#include "ctxtraj/rng.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace ctxtraj::metrics {

template <class Scalar>
using Samples = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

namespace detail {

template <class Derived>
Samples<typename Derived::Scalar> sorted(const Eigen::DenseBase<Derived>& v) {
  Samples<typename Derived::Scalar> out = v.derived().reshaped();
  std::sort(out.data(), out.data() + out.size());
  return out;
}

template <class Derived>
void require_samples(const Eigen::DenseBase<Derived>& v, const char* what) {
  if (v.size() == 0) throw Error("metrics", std::string(what) + " sample set is empty");
  if (!v.derived().allFinite()) throw Error("metrics", std::string(what) + " samples contain non-finite values");
}

// Mean of exp(-(a - b)^2 / (2 sigma^2)) over all pairs.
template <class Scalar>
Scalar mean_kernel(const Samples<Scalar>& a, const Samples<Scalar>& b, Scalar sigma) {
  const Scalar scale = Scalar(-0.5) / (sigma * sigma);
  Scalar total = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    total += ((b.array() - a(i)).square() * scale).exp().sum();
  return total / static_cast<Scalar>(a.size() * b.size());
}

}  // namespace detail

/// Pooled points used by the bandwidth heuristic are capped at this many.
inline constexpr Eigen::Index kMedianSubsample = 2000;

/// Median pairwise distance of the pooled samples (evenly spaced subsample of
/// the sorted pool when it is large). Falls back to 1 when the median is 0.
template <class DX, class DY>
typename DX::Scalar median_bandwidth(const Eigen::DenseBase<DX>& x, const Eigen::DenseBase<DY>& y) {
  using Scalar = typename DX::Scalar;
  Samples<Scalar> pool(x.size() + y.size());
  pool << x.derived().reshaped(), y.derived().reshaped();
  std::sort(pool.data(), pool.data() + pool.size());
  const Eigen::Index n = std::min(pool.size(), kMedianSubsample);
  Samples<Scalar> pick(n);
  for (Eigen::Index i = 0; i < n; ++i)
    pick(i) = pool(n == 1 ? 0 : (i * (pool.size() - 1)) / (n - 1));
  std::vector<Scalar> d;
  d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) d.push_back(std::abs(pick(i) - pick(j)));
  if (d.empty()) return Scalar(1);
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  Scalar median = *mid;
  if (d.size() % 2 == 0) median = (median + *std::max_element(d.begin(), mid)) / 2;
  return median > 0 ? median : Scalar(1);
}

/// Biased squared MMD with a Gaussian kernel:
/// mean k(X, X) + mean k(Y, Y) - 2 mean k(X, Y).
template <class DX, class DY>
typename DX::Scalar mmd(const Eigen::DenseBase<DX>& x, const Eigen::DenseBase<DY>& y,
                        std::optional<typename DX::Scalar> bandwidth = std::nullopt) {
  using Scalar = typename DX::Scalar;
  detail::require_samples(x, "first");
  detail::require_samples(y, "second");
  const Scalar sigma = bandwidth ? *bandwidth : median_bandwidth(x, y);
  if (!(sigma > 0)) throw Error("metrics", "kernel bandwidth must be positive");
  // Sorting fixes the summation order, so sample order cannot change the
  // result; putting the lexicographically smaller set first makes it symmetric.
  Samples<Scalar> a = detail::sorted(x);
  Samples<Scalar> b = detail::sorted(y);
  if (std::lexicographical_compare(b.data(), b.data() + b.size(), a.data(), a.data() + a.size())) a.swap(b);
  const Scalar kxx = detail::mean_kernel(a, a, sigma);
  const Scalar kyy = detail::mean_kernel(b, b, sigma);
  const Scalar kxy = detail::mean_kernel(a, b, sigma);
  return kxx + kyy - 2 * kxy;
}

/// Order-1 Wasserstein distance in 1-D. When sizes differ, the larger set is
/// first reduced to the smaller size by sampling without replacement.
template <class DX, class DY>
typename DX::Scalar wasserstein_1d(const Eigen::DenseBase<DX>& x, const Eigen::DenseBase<DY>& y, std::uint64_t seed = 0) {
  using Scalar = typename DX::Scalar;
  detail::require_samples(x, "first");
  detail::require_samples(y, "second");
  Samples<Scalar> a = detail::sorted(x);
  Samples<Scalar> b = detail::sorted(y);
  if (a.size() != b.size()) {
    Samples<Scalar>& big = a.size() > b.size() ? a : b;
    const Eigen::Index keep = std::min(a.size(), b.size());
    Rng rng(seed);
    std::vector<Scalar> pool(big.data(), big.data() + big.size());
    for (Eigen::Index i = 0; i < keep; ++i) {
      const auto j = static_cast<std::size_t>(i) + rng.index(pool.size() - static_cast<std::size_t>(i));
      std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    }
    pool.resize(static_cast<std::size_t>(keep));
    std::sort(pool.begin(), pool.end());
    big = Eigen::Map<const Samples<Scalar>>(pool.data(), keep);
  }
  return (a - b).cwiseAbs().mean();
}

/// Shared equal-width bins over the pooled range.
template <class Scalar>
struct Bins {
  Scalar lo = 0;
  Scalar hi = 0;
  int count = 64;

  template <class Derived>
  Samples<Scalar> probabilities(const Eigen::DenseBase<Derived>& v) const {
    Samples<Scalar> p = Samples<Scalar>::Zero(count);
    const Scalar width = (hi - lo) / static_cast<Scalar>(count);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      int k = width > 0 ? static_cast<int>(std::floor((v.derived().reshaped()(i) - lo) / width)) : 0;
      k = std::clamp(k, 0, count - 1);
      p(k) += 1;
    }
    return p / static_cast<Scalar>(v.size());
  }
};

template <class DX, class DY>
Bins<typename DX::Scalar> pooled_bins(const Eigen::DenseBase<DX>& x, const Eigen::DenseBase<DY>& y, int count) {
  if (count < 1) throw Error("metrics", "histogram needs at least one bin");
  return {std::min(x.minCoeff(), y.minCoeff()), std::max(x.maxCoeff(), y.maxCoeff()), count};
}

/// Sum p ln(p / q) between two probability vectors; terms with p = 0 vanish.
template <class DP, class DQ>
typename DP::Scalar kl_divergence(const Eigen::DenseBase<DP>& p, const Eigen::DenseBase<DQ>& q) {
  using Scalar = typename DP::Scalar;
  Scalar total = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const Scalar pi = p.derived().reshaped()(i);
    if (pi > 0) total += pi * std::log(pi / q.derived().reshaped()(i));
  }
  return total;
}

/// KL(p || q) between histograms of X and Y on shared bins, each bin
/// smoothed by `smoothing` and renormalized.
template <class DX, class DY>
typename DX::Scalar kl_hist(const Eigen::DenseBase<DX>& x, const Eigen::DenseBase<DY>& y, int bins = 64,
                            typename DX::Scalar smoothing = 1e-8) {
  using Scalar = typename DX::Scalar;
  detail::require_samples(x, "first");
  detail::require_samples(y, "second");
  if (!(smoothing > 0)) throw Error("metrics", "histogram smoothing must be positive");
  const Bins<Scalar> b = pooled_bins(x, y, bins);
  Samples<Scalar> p = b.probabilities(x).array() + smoothing;
  Samples<Scalar> q = b.probabilities(y).array() + smoothing;
  p /= p.sum();
  q /= q.sum();
  return kl_divergence(p, q);
}

/// Jensen-Shannon divergence (natural log) between histograms of X and Y.
template <class DX, class DY>
typename DX::Scalar js(const Eigen::DenseBase<DX>& x, const Eigen::DenseBase<DY>& y, int bins = 64) {
  using Scalar = typename DX::Scalar;
  detail::require_samples(x, "first");
  detail::require_samples(y, "second");
  const Bins<Scalar> b = pooled_bins(x, y, bins);
  const Samples<Scalar> p = b.probabilities(x);
  const Samples<Scalar> q = b.probabilities(y);
  const Samples<Scalar> m = (p + q) / 2;
  return (kl_divergence(p, m) + kl_divergence(q, m)) / 2;
}

// Trajectory features and reports.

/// One trajectory as a sequence of planar positions sampled every dt.
using Trajectory = std::vector<Eigen::Vector2d>;

struct FeatureSamples {
  std::string name;
  Eigen::VectorXd values;
};

/// Pooled per-step marginals: speed = |delta position| / dt, acceleration =
/// delta speed / dt, and the per-step displacements dx and dy.
std::vector<FeatureSamples> feature_marginals(const std::vector<Trajectory>& trajectories, double dt);

struct MetricSettings {
  int bins = 64;
  double smoothing = 1e-8;
  std::uint64_t seed = 0;
};

struct FeatureMetrics {
  std::string name;
  double mmd = 0.0;
  double wd = 0.0;
  double kl = 0.0;
  double js = 0.0;
  double bandwidth = 0.0;
  double hist_min = 0.0;
  double hist_max = 0.0;
  Eigen::Index generated_count = 0;
  Eigen::Index reference_count = 0;
};

struct MetricReport {
  MetricSettings settings;
  std::vector<FeatureMetrics> features;
  FeatureMetrics mean;  // unweighted mean over features of the four metrics

  const FeatureMetrics& feature(const std::string& name) const;
  /// Flat `feature.metric = value` lines.
  std::string serialize() const;
};

/// Compares generated against reference trajectories feature by feature.
MetricReport compare(const std::vector<Trajectory>& generated, const std::vector<Trajectory>& reference, double dt,
                     const MetricSettings& settings = {});

/// Speed-marginal MMD only.
double speed_mmd(const std::vector<Trajectory>& generated, const std::vector<Trajectory>& reference, double dt);

}  // namespace ctxtraj::metrics
