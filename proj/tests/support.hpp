// SPDX-License-Identifier: Apache-2.0
// Shared helpers for the unit tests. The finite-difference oracle here is
// deliberately separate from diff::grad_check so the two can cross-check.
#pragma once

#include "ctxtraj/diff/backward.hpp"
#include "ctxtraj/rng.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace testing {

using Matrix = Eigen::MatrixXd;

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, ctxtraj::Rng& rng, double lo = -2.0, double hi = 2.0) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(lo, hi);
  return m;
}

/// Central differences of a scalar function of several blocks.
inline std::vector<Matrix> numeric_gradient(const std::function<double(const std::vector<Matrix>&)>& f,
                                            std::vector<Matrix> point, double eps = 1e-6) {
  std::vector<Matrix> out;
  for (std::size_t b = 0; b < point.size(); ++b) {
    Matrix g(point[b].rows(), point[b].cols());
    for (Eigen::Index k = 0; k < point[b].size(); ++k) {
      const double saved = point[b](k);
      point[b](k) = saved + eps;
      const double up = f(point);
      point[b](k) = saved - eps;
      const double down = f(point);
      point[b](k) = saved;
      g(k) = (up - down) / (2.0 * eps);
    }
    out.push_back(std::move(g));
  }
  return out;
}

/// max |a - n| / max(1, |a|) over every coordinate of every block.
inline double relative_error(const std::vector<Matrix>& analytic, const std::vector<Matrix>& numeric) {
  double worst = 0.0;
  for (std::size_t b = 0; b < analytic.size(); ++b)
    for (Eigen::Index k = 0; k < analytic[b].size(); ++k)
      worst = std::max(worst, std::abs(analytic[b](k) - numeric[b](k)) / std::max(1.0, std::abs(analytic[b](k))));
  return worst;
}

/// Fresh scratch directory under the build tree's temp area.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("ctxtraj_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
