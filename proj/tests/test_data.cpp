// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include "ctxtraj/data/csv.hpp"
#include "ctxtraj/data/expert.hpp"
#include "ctxtraj/data/idm.hpp"
#include "ctxtraj/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

using namespace ctxtraj;
using namespace ctxtraj::data;

namespace {

std::filesystem::path write_text(const std::string& name, const std::string& text) {
  const auto path = testing::scratch_dir("data") / name;
  std::ofstream(path) << text;
  return path;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("loading a minimal file") {
  const auto path = write_text("two.csv", "# dt=0.1\nscene_id,vehicle_id,frame,x,y,lane\n1,4,0,0.0,1.75,0\n1,4,1,1.0,1.75,0\n");
  const auto scenes = load_trajectories(path);
  REQUIRE(scenes.size() == 1);
  REQUIRE(scenes[0].tracks.size() == 1);
  const Track& t = scenes[0].tracks[0];
  CHECK(t.vehicle_id == 4);
  CHECK(t.x[1] - t.x[0] == 1.0);
  CHECK(scenes[0].dt == 0.1);
}

TEST_CASE("columns may appear in any order") {
  const auto path = write_text("cols.csv", "# dt=0.2\nx,y,lane,frame,vehicle_id,scene_id\n3.5,1.75,0,7,2,9\n");
  const auto scenes = load_trajectories(path);
  CHECK(scenes[0].scene_id == 9);
  CHECK(scenes[0].tracks[0].frames[0] == 7);
  CHECK(scenes[0].tracks[0].x[0] == 3.5);
}

TEST_CASE("loader errors") {
  CHECK(error_of([] { load_trajectories(write_text("empty.csv", "# dt=0.1\nscene_id,vehicle_id,frame,x,y,lane\n")); })
            .find("no tracks") != std::string::npos);
  const std::string dup = error_of([] {
    load_trajectories(write_text("dup.csv", "# dt=0.1\nscene_id,vehicle_id,frame,x,y,lane\n1,3,5,0,0,0\n1,3,5,1,0,0\n"));
  });
  CHECK(dup.find("duplicate") != std::string::npos);
  CHECK(dup.find("line 4") != std::string::npos);
  CHECK(error_of([] {
          load_trajectories(write_text("order.csv", "# dt=0.1\nscene_id,vehicle_id,frame,x,y,lane\n1,3,5,0,0,0\n1,3,4,1,0,0\n"));
        }).find("line 4") != std::string::npos);
  CHECK(error_of([] { load_trajectories(write_text("miss.csv", "# dt=0.1\nscene_id,vehicle_id,frame,x,lane\n1,3,5,0,0\n")); })
            .find("'y'") != std::string::npos);
  const std::string bad = error_of(
      [] { load_trajectories(write_text("num.csv", "# dt=0.1\nscene_id,vehicle_id,frame,x,y,lane\n1,3,5,abc,0,0\n")); });
  CHECK(bad.find("line 3") != std::string::npos);
  CHECK(bad.find("abc") != std::string::npos);
  CHECK(error_of([] { load_trajectories(write_text("nodt.csv", "scene_id,vehicle_id,frame,x,y,lane\n1,3,5,0,0,0\n")); })
            .find("dt") != std::string::npos);
  CHECK_THROWS_AS(load_trajectories("/nonexistent/file.csv"), Error);
}

TEST_CASE("write then load round-trips") {
  Rng rng(1);
  SynthConfig config;
  config.frames = 200;
  const Scene scene = synth_experts(config, rng);
  const auto path = testing::scratch_dir("roundtrip") / "scene.csv";
  write_trajectories(path, {scene}, {"note=one"});
  const auto back = load_trajectories(path);
  REQUIRE(back.size() == 1);
  CHECK(back[0].scene_id == scene.scene_id);
  CHECK(back[0].dt == scene.dt);
  REQUIRE(back[0].tracks.size() == scene.tracks.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < scene.tracks.size(); ++i) {
    const Track& a = scene.tracks[i];
    const Track& b = back[0].tracks[i];
    CHECK(a.vehicle_id == b.vehicle_id);
    CHECK(a.frames == b.frames);
    CHECK(a.lane == b.lane);
    for (std::size_t k = 0; k < a.size(); ++k)
      worst = std::max({worst, std::abs(a.x[k] - b.x[k]), std::abs(a.y[k] - b.y[k])});
  }
  CHECK(worst <= 1e-9);
  // Shortest round-trip formatting is exact, not just close.
  CHECK(worst == 0.0);
}

TEST_CASE("double formatting round-trips") {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.uniform(-1e4, 1e4) * std::pow(10.0, static_cast<double>(rng.index(20)) - 10.0);
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(2.0) == "2");
}

TEST_CASE("idm acceleration examples") {
  const IdmParams p;
  CHECK(idm_acceleration(p, p.v0, std::nullopt, 0.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(std::abs(idm_acceleration(p, 0.0, p.s0, 0.0)) < 1e-15);
  CHECK(idm_acceleration(p, 0.0, 100.0, 0.0) == doctest::Approx(p.a_max * (1.0 - std::pow(2.0 / 100.0, 2))).epsilon(1e-15));
  CHECK(idm_acceleration(p, 0.0, 100.0, 0.0) == doctest::Approx(0.9996).epsilon(1e-12));
  // Closing in on a slower leader brakes harder than matching its speed.
  CHECK(idm_acceleration(p, 10.0, 30.0, 3.0) < idm_acceleration(p, 10.0, 30.0, 0.0));
  IdmParams bad = p;
  bad.T = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("equilibrium platoon holds its speed") {
  const IdmParams p;
  for (double v : {3.0, 8.0, 12.0}) {
    const double gap = equilibrium_gap(p, v);
    CHECK(std::abs(idm_acceleration(p, v, gap, 0.0)) < 1e-9);
    std::vector<PlatoonVehicle> platoon;
    for (int i = 0; i < 6; ++i) platoon.push_back({-static_cast<double>(i) * (gap + 5.0), v});
    const auto positions = simulate_platoon(p, [](double, double) { return 0.0; }, platoon, 5.0, 500, 0.1);
    double worst = 0.0;
    for (const auto& track : positions)
      for (std::size_t f = 1; f < track.size(); ++f) worst = std::max(worst, std::abs((track[f] - track[f - 1]) / 0.1 - v) / v);
    CHECK(worst <= 0.01);
  }
}

TEST_CASE("synthesized scenes never overlap vehicles") {
  SynthConfig config;
  config.frames = 2000;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const Scene scene = synth_experts(config, rng);
    std::map<int, std::vector<const Track*>> lanes;
    for (const Track& t : scene.tracks) lanes[t.lane.front()].push_back(&t);
    double min_gap = INFINITY;
    for (auto& [lane, tracks] : lanes) {
      std::sort(tracks.begin(), tracks.end(), [](const Track* a, const Track* b) { return a->x.front() > b->x.front(); });
      for (std::size_t i = 1; i < tracks.size(); ++i)
        for (std::size_t f = 0; f < tracks[i]->size(); ++f)
          min_gap = std::min(min_gap, tracks[i - 1]->x[f] - tracks[i]->x[f] - config.vehicle_length);
    }
    INFO("seed " << seed);
    CHECK(min_gap >= 0.0);
  }
}

TEST_CASE("synthesized scene shape") {
  SynthConfig config;
  Rng a(7), b(7);
  const Scene s1 = synth_experts(config, a);
  const Scene s2 = synth_experts(config, b);
  CHECK(static_cast<int>(s1.tracks.size()) == config.vehicles);
  for (const Track& t : s1.tracks) {
    CHECK(static_cast<long>(t.size()) == config.frames);
    for (std::size_t k = 0; k < t.size(); ++k) {
      CHECK(t.y[k] == doctest::Approx((t.lane[k] + 0.5) * config.lane_width));
      CHECK(t.lane[k] < config.lanes);
    }
  }
  for (std::size_t i = 0; i < s1.tracks.size(); ++i) CHECK(s1.tracks[i].x == s2.tracks[i].x);
  // Stop-and-go: some vehicle comes close to a standstill and later speeds up.
  double slowest = INFINITY, fastest = 0.0;
  for (const Track& t : s1.tracks)
    for (std::size_t k = 1; k < t.size(); ++k) {
      const double v = (t.x[k] - t.x[k - 1]) / config.dt;
      slowest = std::min(slowest, v);
      fastest = std::max(fastest, v);
    }
  CHECK(slowest < 1.0);
  CHECK(fastest > 8.0);

  SynthConfig none = config;
  none.vehicles = 0;
  Rng rng(1);
  CHECK_THROWS_AS(synth_experts(none, rng), Error);
  SynthConfig tight = config;
  tight.spawn_spacing = tight.vehicle_length + tight.idm.s0 * 0.5;
  CHECK_THROWS_AS(tight.validate(), Error);
}

TEST_CASE("expert pairs") {
  Scene scene;
  Track moving;
  moving.vehicle_id = 1;
  Track parked;
  parked.vehicle_id = 2;
  for (long f = 0; f < 5; ++f) {
    moving.frames.push_back(f);
    moving.x.push_back(static_cast<double>(f));
    moving.y.push_back(5.25);
    moving.lane.push_back(1);
    parked.frames.push_back(f);
    parked.x.push_back(-40.0);
    parked.y.push_back(1.75);
    parked.lane.push_back(0);
  }
  scene.tracks = {moving, parked};
  const env::EnvConfig config;
  const auto pairs = expert_pairs(scene, 1, config);
  REQUIRE(pairs.size() == 4);
  env::EgoState replay = env::logged_state(moving, 0, config.dt);
  for (const auto& p : pairs) {
    CHECK(p.action.dx == 1.0);
    CHECK(p.action.dy == 0.0);
    CHECK(p.observation.size() == env::observation_size(config.lanes));
    replay = env::step(replay, p.action, config.dt);
  }
  CHECK(replay.x == moving.x.back());
  for (const auto& p : expert_pairs(scene, 2, config)) {
    CHECK(p.action.dx == 0.0);
    CHECK(p.action.dy == 0.0);
  }
  Track single;
  single.vehicle_id = 3;
  single.frames = {0};
  single.x = {0.0};
  single.y = {1.75};
  single.lane = {0};
  scene.tracks.push_back(single);
  CHECK_THROWS_AS(expert_pairs(scene, 3, config), Error);
}
