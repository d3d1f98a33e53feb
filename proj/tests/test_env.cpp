// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include "ctxtraj/env/rollout.hpp"
#include "ctxtraj/error.hpp"

#include <doctest.h>

#include <cmath>

using namespace ctxtraj;
using namespace ctxtraj::env;

namespace {

// Constant-velocity track in one lane.
data::Track straight(int id, int lane, double x0, double vx, long first, long last, double dt = 0.1) {
  data::Track t;
  t.vehicle_id = id;
  for (long f = first; f <= last; ++f) {
    t.frames.push_back(f);
    t.x.push_back(x0 + vx * dt * static_cast<double>(f - first));
    t.y.push_back((lane + 0.5) * 3.5);
    t.lane.push_back(lane);
  }
  return t;
}

Standardizer identity(int lanes) {
  Standardizer s;
  s.mean = Eigen::VectorXd::Zero(observation_size(lanes));
  s.stddev = Eigen::VectorXd::Ones(observation_size(lanes));
  return s;
}

class ConstantPolicy : public Policy {
 public:
  explicit ConstantPolicy(Eigen::Vector2d action) : action_(action) {}
  void reset(Eigen::Index) override {}
  PolicyDecision act(const Eigen::MatrixXd& observations, Rng&) override {
    PolicyDecision d;
    d.actions = action_.transpose().replicate(observations.rows(), 1);
    d.log_probs = Eigen::VectorXd::Zero(observations.rows());
    return d;
  }

 private:
  Eigen::Vector2d action_;
};

class NoisyPolicy : public Policy {
 public:
  void reset(Eigen::Index) override {}
  PolicyDecision act(const Eigen::MatrixXd& observations, Rng& rng) override {
    PolicyDecision d;
    d.actions.resize(observations.rows(), 2);
    for (Eigen::Index b = 0; b < observations.rows(); ++b) d.actions.row(b) << 1.0 + 0.2 * rng.normal(), 0.05 * rng.normal();
    d.log_probs = Eigen::VectorXd::Zero(observations.rows());
    return d;
  }
};

}  // namespace

TEST_CASE("step examples") {
  CHECK(step(EgoState{}, EnvAction{0.0, 0.0}, 0.1) == EgoState{});
  EgoState moving;
  moving.vx = 10.0;
  const EgoState cruise = step(moving, {1.0, 0.0}, 0.1);
  CHECK(cruise.x == 1.0);
  CHECK(cruise.vx == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(cruise.ax == doctest::Approx(0.0).epsilon(1e-12));
  const EgoState braking = step(moving, {0.5, 0.0}, 0.1);
  CHECK(braking.vx == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(braking.ax == doctest::Approx(-50.0).epsilon(1e-12));
}

TEST_CASE("step rejects invalid inputs") {
  CHECK_THROWS_AS(step(EgoState{}, {4.0, 3.01}, 0.1), Error);
  CHECK_NOTHROW(step(EgoState{}, {3.0, 4.0}, 0.1));
  CHECK_THROWS_AS(step(EgoState{}, {std::nan(""), 0.0}, 0.1), Error);
  CHECK_THROWS_AS(step(EgoState{}, {1.0, 0.0}, 0.0), Error);
  EgoState bad;
  bad.vx = INFINITY;
  CHECK_THROWS_AS(step(bad, {1.0, 0.0}, 0.1), Error);
}

TEST_CASE("step advances positions by exactly the action") {
  Rng rng(1);
  EgoState s;
  for (int i = 0; i < 1000; ++i) {
    const EnvAction a{rng.uniform(-2.0, 2.0), rng.uniform(-1.0, 1.0)};
    const EgoState next = step(s, a, 0.1);
    CHECK(next.x == s.x + a.dx);
    CHECK(next.y == s.y + a.dy);
    s = next;
  }
}

TEST_CASE("replaying reconstructed actions reproduces logged kinematics") {
  Rng rng(2);
  data::Track track;
  track.vehicle_id = 1;
  double x = 100.0, y = 5.25;
  for (long f = 0; f <= 1002; ++f) {
    track.frames.push_back(f);
    track.x.push_back(x);
    track.y.push_back(y);
    track.lane.push_back(1);
    x += 1.0 + 0.3 * rng.normal();
    y += 0.02 * rng.normal();
  }
  EgoState replay = logged_state(track, 2, 0.1);
  double drift = 0.0;
  for (std::size_t i = 3; i < track.size(); ++i) {
    replay = step(replay, {track.x[i] - track.x[i - 1], track.y[i] - track.y[i - 1]}, 0.1);
    const EgoState logged = logged_state(track, i, 0.1);
    drift = std::max({drift, std::abs(replay.x - logged.x), std::abs(replay.y - logged.y)});
    CHECK(replay == logged);
  }
  CHECK(drift <= 1e-12);
}

TEST_CASE("neighbor template examples") {
  data::Scene scene;
  scene.tracks.push_back(straight(1, 1, 0.0, 10.0, 0, 20));
  const NeighborMatrix empty = extract_neighbors(scene, 1, 5, 50.0);
  for (int s = 0; s < kNeighborSlots; ++s) {
    CHECK(empty.row(s) == sentinel_row(static_cast<Slot>(s), 50.0));
    CHECK(empty(s, 4) == 0.0);
  }
  CHECK(sentinel_row(Slot::SameLead, 50.0)(0) == 50.0);
  CHECK(sentinel_row(Slot::SameFollow, 50.0)(0) == -50.0);

  scene.tracks.push_back(straight(2, 1, 5.0, 10.0, 0, 20));
  NeighborMatrix one = extract_neighbors(scene, 1, 5, 50.0);
  Eigen::Matrix<double, 1, 5> expected;
  expected << 5.0, 0.0, 0.0, 0.0, 1.0;
  CHECK((one.row(static_cast<int>(Slot::SameLead)) - expected).cwiseAbs().maxCoeff() < 1e-12);
  for (int s = 0; s < kNeighborSlots; ++s)
    if (s != static_cast<int>(Slot::SameLead)) CHECK(one.row(s) == sentinel_row(static_cast<Slot>(s), 50.0));

  scene.tracks.push_back(straight(3, 1, 8.0, 10.0, 0, 20));
  CHECK(extract_neighbors(scene, 1, 5, 50.0)(static_cast<int>(Slot::SameLead), 0) == doctest::Approx(5.0));
}

TEST_CASE("neighbor slots by lane and direction") {
  data::Scene scene;
  scene.tracks.push_back(straight(1, 1, 100.0, 10.0, 0, 5));
  scene.tracks.push_back(straight(2, 2, 110.0, 12.0, 0, 5));  // left lead
  scene.tracks.push_back(straight(3, 2, 90.0, 10.0, 0, 5));   // left follow
  scene.tracks.push_back(straight(4, 0, 120.0, 10.0, 0, 5));  // right lead
  scene.tracks.push_back(straight(5, 0, 40.0, 10.0, 0, 5));   // right follow, outside the RoI
  scene.tracks.push_back(straight(6, 1, 97.0, 9.0, 0, 5));    // same follow
  const NeighborMatrix n = extract_neighbors(scene, 1, 0, 50.0);
  CHECK(n(static_cast<int>(Slot::LeftLead), 0) == doctest::Approx(10.0));
  CHECK(n(static_cast<int>(Slot::LeftLead), 1) == doctest::Approx(3.5));
  CHECK(n(static_cast<int>(Slot::LeftFollow), 0) == doctest::Approx(-10.0));
  CHECK(n(static_cast<int>(Slot::RightLead), 0) == doctest::Approx(20.0));
  CHECK(n(static_cast<int>(Slot::RightLead), 1) == doctest::Approx(-3.5));
  CHECK(n(static_cast<int>(Slot::RightFollow), 4) == 0.0);
  CHECK(n(static_cast<int>(Slot::SameFollow), 0) == doctest::Approx(-3.0));
  CHECK(n(static_cast<int>(Slot::SameLead), 4) == 0.0);
  CHECK_THROWS_AS(extract_neighbors(scene, 1, 99, 50.0), Error);
  CHECK_THROWS_AS(extract_neighbors(scene, 42, 0, 50.0), Error);
}

TEST_CASE("neighbor features are translation invariant") {
  // Positions on a 1/64 m grid keep every difference exact under the shift.
  Rng rng(3);
  data::Scene scene;
  for (int id = 1; id <= 12; ++id) {
    const int lane = static_cast<int>(rng.index(3));
    const double x0 = static_cast<double>(rng.index(150 * 64)) / 64.0;
    const double dx = static_cast<double>(32 + rng.index(96)) / 64.0;
    data::Track t;
    t.vehicle_id = id;
    for (long f = 0; f <= 10; ++f) {
      t.frames.push_back(f);
      t.x.push_back(x0 + dx * static_cast<double>(f));
      t.y.push_back(lane * 3.5 + 1.75);
      t.lane.push_back(lane);
    }
    scene.tracks.push_back(t);
  }
  data::Scene moved = scene;
  for (auto& t : moved.tracks) {
    for (auto& v : t.x) v += 1024.0;
    for (auto& v : t.y) v -= 64.0;
  }
  for (int id = 1; id <= 12; ++id)
    for (long f : {0L, 4L, 10L}) CHECK(extract_neighbors(scene, id, f, 50.0) == extract_neighbors(moved, id, f, 50.0));
}

TEST_CASE("observation assembly") {
  EgoState z{1, 2, 3, 4, 5, 6};
  NeighborMatrix v;
  for (int i = 0; i < v.size(); ++i) v(i / 5, i % 5) = i;
  const Eigen::VectorXd obs = assemble_observation(z, v, 1, 3);
  REQUIRE(obs.size() == observation_size(3));
  CHECK(obs.size() == 39);
  CHECK(obs.tail(3) == Eigen::Vector3d(0, 1, 0));
  CHECK(obs.head(6) == z.vector());
  for (int i = 0; i < 30; ++i) CHECK(obs(6 + i) == i);
  const ObservationBlocks back = split_observation(obs, 3);
  CHECK(back.ego == z);
  CHECK(back.neighbors == v);
  CHECK(back.lane_one_hot == Eigen::Vector3d(0, 1, 0));
  CHECK_THROWS_AS(assemble_observation(z, v, 3, 3), Error);
}

TEST_CASE("standardizer") {
  Eigen::MatrixXd rows(4, 3);
  rows << 1, 5, 2, 3, 5, 4, 5, 5, 6, 7, 5, 8;
  const Standardizer s = Standardizer::fit(rows);
  CHECK(s.mean(0) == doctest::Approx(4.0));
  CHECK(s.stddev(1) == 1.0);  // constant feature keeps unit scale
  const Eigen::MatrixXd out = s.apply_rows(rows);
  CHECK(std::abs(out.col(0).mean()) < 1e-12);
  CHECK(out.col(0).squaredNorm() / 4.0 == doctest::Approx(1.0));
  CHECK(out.col(1).isZero(0.0));
}

TEST_CASE("rollout of a zero policy from rest stays put") {
  data::Scene scene;
  data::Track parked = straight(1, 1, 10.0, 0.0, 0, 40);
  scene.tracks.push_back(parked);
  scene.tracks.push_back(straight(2, 0, 0.0, 10.0, 0, 40));
  ConstantPolicy still({0.0, 0.0});
  gail::RolloutBuffer buffer;
  Rng rng(4);
  const EnvConfig config;
  const auto traj = rollout(still, scene, 1, 5, 30, config, identity(3), rng, buffer);
  CHECK(traj.positions.size() == 31);
  for (const auto& p : traj.positions) CHECK(p == Eigen::Vector2d(10.0, 5.25));
  CHECK(buffer.trajectories() == 1);
  CHECK(buffer[0].size() == 30);
  // Observation length stays fixed across the run.
  for (std::size_t t = 0; t < buffer[0].size(); ++t) CHECK(buffer[0].observations[t].size() == observation_size(3));
}

TEST_CASE("rollout determinism and horizon bookkeeping") {
  data::Scene scene;
  scene.tracks.push_back(straight(1, 1, 0.0, 10.0, 0, 60));
  scene.tracks.push_back(straight(2, 1, 20.0, 10.0, 0, 60));
  const EnvConfig config;
  NoisyPolicy noisy;
  gail::RolloutBuffer b1, b2, b3;
  Rng r1(5), r2(5), r3(5);
  const auto t1 = rollout(noisy, scene, 1, 10, 40, config, identity(3), r1, b1);
  const auto t2 = rollout(noisy, scene, 1, 10, 40, config, identity(3), r2, b2);
  CHECK(t1.positions == t2.positions);
  CHECK(b1[0].observations == b2[0].observations);
  rollout(noisy, scene, 1, 10, 1, config, identity(3), r3, b3);
  CHECK(b3.steps() == 1);
  CHECK_THROWS_AS(rollout(noisy, scene, 1, 30, 31, config, identity(3), r3, b3), Error);
  CHECK_THROWS_AS(rollout(noisy, scene, 1, 10, 0, config, identity(3), r3, b3), Error);
}

TEST_CASE("rollout positions are self-consistent with the transition") {
  data::Scene scene;
  scene.tracks.push_back(straight(1, 1, 0.0, 10.0, 0, 80));
  const EnvConfig config;
  NoisyPolicy noisy;
  gail::RolloutBuffer buffer;
  Rng rng(6);
  const auto traj = rollout(noisy, scene, 1, 2, 60, config, identity(3), rng, buffer);
  for (std::size_t t = 0; t + 1 < traj.positions.size(); ++t) {
    const Eigen::Vector2d a = buffer[0].actions[t];
    CHECK(traj.positions[t + 1].x() == traj.positions[t].x() + a.x());
    CHECK(traj.positions[t + 1].y() == traj.positions[t].y() + a.y());
    // The next observation's ego velocity is the action over dt.
    CHECK(buffer[0].next_observations[t](2) == doctest::Approx(a.x() / config.dt).epsilon(1e-12));
  }
}
