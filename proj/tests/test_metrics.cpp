// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include "ctxtraj/error.hpp"
#include "ctxtraj/metrics/metrics.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace ctxtraj;
using namespace ctxtraj::metrics;

namespace {

Eigen::VectorXd draw(Eigen::Index n, Rng& rng, double lo = -3.0, double hi = 3.0) {
  return testing::random_matrix(n, 1, rng, lo, hi);
}

Eigen::VectorXd reversed(const Eigen::VectorXd& v) { return v.reverse(); }

Trajectory line(double step, int samples, double y = 0.0) {
  Trajectory t;
  for (int i = 0; i < samples; ++i) t.emplace_back(step * i, y);
  return t;
}

}  // namespace

TEST_CASE("mmd examples") {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1), one = Eigen::VectorXd::Ones(1);
  CHECK(std::abs(mmd(zero, one, 1.0) - (2.0 - 2.0 * std::exp(-0.5))) <= 1e-9);
  Rng rng(1);
  const Eigen::VectorXd x = draw(50, rng), y = draw(40, rng, 0.0, 5.0);
  CHECK(std::abs(mmd(x, x)) <= 1e-12);
  CHECK(mmd(x, y) == mmd(y, x));
  CHECK(mmd(x, y) == mmd(reversed(x), y));
  for (int i = 0; i < 50; ++i) CHECK(mmd(draw(20, rng), draw(30, rng, -1.0, 4.0)) >= -1e-12);
  CHECK_THROWS_AS(mmd(Eigen::VectorXd(), y), Error);
  CHECK_THROWS_AS(mmd(x, y, 0.0), Error);
}

TEST_CASE("median bandwidth") {
  Eigen::VectorXd x(2), y(1);
  x << 0.0, 1.0;
  y << 3.0;
  // Pairwise distances 1, 2, 3 have median 2.
  CHECK(median_bandwidth(x, y) == 2.0);
  CHECK(median_bandwidth(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2)) == 1.0);
}

TEST_CASE("wasserstein examples") {
  CHECK(wasserstein_1d(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 3.0)) == 3.0);
  CHECK(wasserstein_1d(Eigen::Vector2d(0.0, 1.0), Eigen::Vector2d(2.0, 1.0)) == 1.0);
  Rng rng(2);
  const Eigen::VectorXd x = draw(64, rng);
  for (double c : {-2.5, 0.125, 7.0}) CHECK(std::abs(wasserstein_1d(x, (x.array() + c).matrix()) - std::abs(c)) <= 1e-9);
  CHECK(wasserstein_1d(x, x) == 0.0);
  CHECK(wasserstein_1d(x, reversed(x)) == 0.0);
  for (int i = 0; i < 50; ++i) {
    const Eigen::VectorXd a = draw(16, rng), b = draw(16, rng, 0.0, 6.0), c = draw(16, rng, -4.0, 1.0);
    CHECK(wasserstein_1d(a, c) <= wasserstein_1d(a, b) + wasserstein_1d(b, c) + 1e-9);
  }
}

TEST_CASE("wasserstein resamples the larger set") {
  Rng rng(3);
  const Eigen::VectorXd x = draw(10, rng);
  const Eigen::VectorXd y = draw(25, rng);
  const double a = wasserstein_1d(x, y, 11);
  CHECK(a == wasserstein_1d(x, y, 11));
  CHECK(a == wasserstein_1d(y, x, 11));
  CHECK(wasserstein_1d(x, y, 12) >= 0.0);
}

TEST_CASE("histogram divergences") {
  Eigen::VectorXd p(2), q(2);
  p << 0.5, 0.5;
  q << 0.25, 0.75;
  CHECK(kl_divergence(p, q) == doctest::Approx(0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0)).epsilon(1e-14));
  // Same through samples: bins [0, 0.5) and [0.5, 1].
  Eigen::VectorXd xs(4), ys(4);
  xs << 0.0, 0.0, 1.0, 1.0;
  ys << 0.0, 1.0, 1.0, 1.0;
  CHECK(kl_hist(xs, ys, 2, 1e-12) == doctest::Approx(0.1438).epsilon(1e-3));

  Rng rng(4);
  const Eigen::VectorXd x = draw(80, rng), y = draw(60, rng, -1.0, 5.0);
  CHECK(std::abs(kl_hist(x, x)) <= 1e-12);
  CHECK(std::abs(js(x, x)) <= 1e-12);
  CHECK(js(x, y) == js(y, x));
  CHECK(js(x, y) == js(reversed(x), y));
  CHECK(kl_hist(x, y) == kl_hist(reversed(x), reversed(y)));
  for (int i = 0; i < 50; ++i) {
    const Eigen::VectorXd a = draw(30, rng), b = draw(30, rng, 0.0, 4.0);
    CHECK(kl_hist(a, b) >= -1e-12);
    const double d = js(a, b);
    CHECK(d >= -1e-12);
    CHECK(d <= std::numbers::ln2 + 1e-9);
  }
  const Eigen::VectorXd left = draw(20, rng, 0.0, 1.0), right = draw(20, rng, 10.0, 11.0);
  CHECK(std::abs(js(left, right) - std::numbers::ln2) <= 1e-9);
  CHECK_THROWS_AS(kl_hist(x, y, 0), Error);
  CHECK_THROWS_AS(kl_hist(x, y, 64, 0.0), Error);
}

TEST_CASE("feature marginals") {
  const auto still = feature_marginals({line(0.0, 5)}, 0.1);
  CHECK(still[0].name == "speed");
  CHECK(still[0].values.isZero(0.0));
  CHECK(still[1].values.isZero(0.0));
  const auto uniform = feature_marginals({line(1.0, 6)}, 0.1);
  CHECK(uniform[0].values.size() == 5);
  CHECK((uniform[0].values.array() - 10.0).abs().maxCoeff() < 1e-12);
  CHECK(uniform[1].values.cwiseAbs().maxCoeff() < 1e-10);
  const Trajectory hand = {{0.0, 0.0}, {1.0, 0.0}, {3.0, 0.0}};
  const auto h = feature_marginals({hand}, 1.0);
  CHECK(h[0].values == Eigen::Vector2d(1.0, 2.0));
  CHECK(h[1].values == Eigen::VectorXd::Ones(1));
  CHECK(h[2].values == Eigen::Vector2d(1.0, 2.0));
  CHECK(h[3].values == Eigen::Vector2d::Zero());
  const auto pooled = feature_marginals({hand, line(1.0, 4)}, 1.0);
  CHECK(pooled[0].values.size() == 5);
  CHECK_THROWS_AS(feature_marginals({line(1.0, 2)}, 0.1), Error);
  CHECK_THROWS_AS(feature_marginals({}, 0.1), Error);
  CHECK_THROWS_AS(feature_marginals({hand}, 0.0), Error);
}

TEST_CASE("report self comparison and shift") {
  Rng rng(5);
  std::vector<Trajectory> gen;
  for (int k = 0; k < 6; ++k) {
    Trajectory t;
    Eigen::Vector2d p(0.0, 1.75);
    for (int i = 0; i < 30; ++i) {
      t.push_back(p);
      p.x() += rng.uniform(0.2, 1.2);
    }
    gen.push_back(t);
  }
  const MetricReport self = compare(gen, gen, 0.1);
  for (const auto& f : self.features) {
    CHECK(std::abs(f.mmd) <= 1e-9);
    CHECK(std::abs(f.wd) <= 1e-9);
    CHECK(std::abs(f.kl) <= 1e-9);
    CHECK(std::abs(f.js) <= 1e-9);
  }
  // Adding 0.1 m per step at dt 0.1 raises every speed by exactly 1 m/s.
  std::vector<Trajectory> faster = gen;
  for (Trajectory& t : faster)
    for (std::size_t i = 0; i < t.size(); ++i) t[i].x() += 0.1 * static_cast<double>(i);
  const MetricReport shifted = compare(gen, faster, 0.1);
  CHECK(shifted.feature("speed").wd == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(shifted.feature("acceleration").wd < 1e-6);
  CHECK(speed_mmd(gen, faster, 0.1) == shifted.feature("speed").mmd);
  CHECK(shifted.mean.wd == doctest::Approx((1.0 + 0.1 + shifted.feature("acceleration").wd) / 4.0));

  const std::string text = shifted.serialize();
  CHECK(text.find("settings.bins = 64") != std::string::npos);
  CHECK(text.find("speed.wd = ") != std::string::npos);
  CHECK(text.find("mean.js = ") != std::string::npos);
  CHECK_THROWS_AS(shifted.feature("jerk"), Error);
}
