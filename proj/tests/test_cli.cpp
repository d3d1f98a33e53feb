// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include "ctxtraj/cli/checkpoint.hpp"
#include "ctxtraj/cli/commands.hpp"
#include "ctxtraj/cli/settings.hpp"
#include "ctxtraj/data/csv.hpp"
#include "ctxtraj/error.hpp"

#include <doctest.h>
#include <json.hpp>

#include <fstream>
#include <sstream>

using namespace ctxtraj;
using namespace ctxtraj::cli;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::vector<std::string> out;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

// Rows that are neither comments nor the header.
std::vector<std::string> rows_of(const fs::path& p) {
  std::vector<std::string> out;
  for (const std::string& l : lines_of(p))
    if (!l.empty() && l[0] != '#') out.push_back(l);
  if (!out.empty()) out.erase(out.begin());
  return out;
}

const char* kTiny =
    "seed = 5\n"
    "synth.vehicles = 4\n"
    "synth.frames = 160\n"
    "gail.optimizer = adam\n"
    "gail.lr_policy = 1e-3\n"
    "gail.lr_value = 1e-3\n"
    "gail.lr_disc = 1e-3\n"
    "gail.batch = 4\n"
    "gail.horizon = 8\n"
    "gail.disc_updates = 2\n"
    "gail.ppo_epochs = 2\n"
    "nets.hidden = 8\n"
    "nets.disc_mlp = 8\n"
    "run.iterations = 2\n"
    "run.checkpoint_every = 1\n"
    "run.ablate_iterations = 2\n"
    "run.eval_count = 4\n";

// A tiny config file plus the scene it synthesizes.
struct Fixture {
  fs::path dir;
  fs::path config;
  fs::path scene;
  Resolved run;

  explicit Fixture(const std::string& name, const std::string& extra = "") {
    dir = testing::scratch_dir(name);
    config = dir / "tiny.profile";
    std::ofstream(config) << kTiny << extra;
    run = resolve(config.string(), std::nullopt);
    scene = dir / "scene.csv";
    cmd_synth(run, scene);
  }
};

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("settings parsing") {
  const Settings s = parse_settings("# comment\n\nseed = 11\ngail.ppo_epsilon=0.3  # trailing\nnets.hidden = 16\n");
  CHECK(s.seed == 11);
  CHECK(s.train.ppo_epsilon == 0.3);
  CHECK(s.train.net.hidden == 16);
  CHECK(error_of([] { parse_settings("gail.bogus = 1\n", "x.profile"); }).find("gail.bogus") != std::string::npos);
  CHECK(error_of([] { parse_settings("nets.hidden = many\n"); }).find("nets.hidden") != std::string::npos);
  CHECK_THROWS_AS(parse_settings("no equals sign\n"), Error);

  Settings round = parse_settings(s.canonical());
  CHECK(round.canonical() == s.canonical());
  CHECK(fingerprint("") == "cbf29ce484222325");
  CHECK(fingerprint(s.canonical()).size() == 16);

  Settings f = s;
  f.finalize();
  CHECK(f.train.seed == 11);
  Settings bad = s;
  bad.set("gail.lr_policy", "-1");
  CHECK_THROWS_AS(bad.finalize(), Error);
}

TEST_CASE("profiles shipped with the project parse") {
  for (const char* name : {"default.profile", "published.profile"}) {
    const fs::path p = fs::path(CTXTRAJ_SOURCE_DIR) / "profiles" / name;
    INFO(p.string());
    Settings s = load_settings(p);
    CHECK_NOTHROW(s.finalize());
  }
}

TEST_CASE("synth writes the configured scene deterministically") {
  Fixture fx("cli_synth");
  const auto scenes = data::load_trajectories(fx.scene);
  REQUIRE(scenes.size() == 1);
  CHECK(scenes[0].tracks.size() == 4);
  const fs::path again = fx.dir / "again.csv";
  cmd_synth(fx.run, again);
  CHECK(slurp(again) == slurp(fx.scene));
  CHECK(lines_of(fx.scene)[1].find("seed=5") != std::string::npos);

  const Resolved other = resolve(fx.config.string(), 6);
  cmd_synth(other, again);
  CHECK(slurp(again) != slurp(fx.scene));

  Fixture empty("cli_synth_zero");
  Resolved zero = empty.run;
  zero.settings.synth.vehicles = 0;
  const fs::path never = empty.dir / "never.csv";
  CHECK_THROWS_AS(cmd_synth(zero, never), Error);
  CHECK_FALSE(fs::exists(never));
}

TEST_CASE("train writes losses, evaluations and a checkpoint") {
  Fixture fx("cli_train");
  const fs::path out = fx.dir / "run";
  const TrainOutcome result = cmd_train(fx.run, fx.scene, out);
  CHECK(result.reports.size() == 2);
  const auto rows = rows_of(out / "loss.csv");
  REQUIRE(rows.size() == 2);
  CHECK(lines_of(out / "loss.csv")[1] == "iter,disc_loss,policy_loss,value_loss,entropy,mean_reward");
  CHECK(lines_of(out / "loss.csv")[0].find("config_hash=") != std::string::npos);
  for (const std::string& r : rows) {
    std::stringstream ss(r);
    int fields = 0;
    for (std::string cell; std::getline(ss, cell, ',');) {
      CHECK(std::isfinite(std::stod(cell)));
      ++fields;
    }
    CHECK(fields == 6);
  }
  CHECK(rows_of(out / "eval.csv").size() == 3);
  CHECK(fs::exists(out / "checkpoint.json"));

  // Same inputs, same bytes.
  const fs::path twin = fx.dir / "twin";
  cmd_train(fx.run, fx.scene, twin);
  CHECK(slurp(twin / "loss.csv") == slurp(out / "loss.csv"));
  CHECK(slurp(twin / "eval.csv") == slurp(out / "eval.csv"));
  CHECK(slurp(twin / "checkpoint.json") == slurp(out / "checkpoint.json"));
}

TEST_CASE("resume continues where the checkpoint stopped") {
  Fixture fx("cli_resume");
  const fs::path straight = fx.dir / "straight";
  Resolved four = fx.run;
  four.settings.run.iterations = 4;
  four.settings.run.checkpoint_every = 2;
  cmd_train(four, fx.scene, straight);

  const fs::path split = fx.dir / "split";
  Resolved two = four;
  two.settings.run.iterations = 2;
  cmd_train(two, fx.scene, split);
  const TrainOutcome rest = cmd_train(four, fx.scene, split, split / "checkpoint.json");
  REQUIRE(rest.reports.size() == 2);
  CHECK(rest.reports.front().iteration == 2);
  CHECK(rows_of(split / "loss.csv") == rows_of(straight / "loss.csv"));
  const auto a = nlohmann::json::parse(slurp(straight / "checkpoint.json"));
  const auto b = nlohmann::json::parse(slurp(split / "checkpoint.json"));
  CHECK(a["networks"] == b["networks"]);
  CHECK(a["iteration"] == 4);
}

TEST_CASE("ablation flags off still train") {
  Fixture fx("cli_off", "gail.use_ppo = false\ngail.use_wgan_gp = false\n");
  CHECK(cmd_train(fx.run, fx.scene, fx.dir / "run").reports.size() == 2);
}

TEST_CASE("checkpoint round trip") {
  Fixture fx("cli_ckpt");
  const fs::path out = fx.dir / "run";
  cmd_train(fx.run, fx.scene, out);
  const fs::path path = out / "checkpoint.json";

  gail::Trainer trainer(fx.run.settings.train, fx.run.settings.env, data::load_trajectories(fx.scene));
  load_checkpoint(path, trainer);
  CHECK(trainer.iteration() == 2);
  const fs::path again = fx.dir / "again.json";
  save_checkpoint(again, trainer, checkpoint_settings(path), fx.run.provenance);
  CHECK(nlohmann::json::parse(slurp(again))["networks"] == nlohmann::json::parse(slurp(path))["networks"]);
  CHECK(nlohmann::json::parse(slurp(again))["optimizers"] == nlohmann::json::parse(slurp(path))["optimizers"]);
  CHECK(nlohmann::json::parse(slurp(again))["rng"] == nlohmann::json::parse(slurp(path))["rng"]);

  auto doc = nlohmann::json::parse(slurp(path));
  doc["format_version"] = kCheckpointVersion + 1;
  const fs::path future = fx.dir / "future.json";
  std::ofstream(future) << doc.dump();
  CHECK(error_of([&] { load_policy(future); }).find("version") != std::string::npos);
  std::ofstream(fx.dir / "broken.json") << "{not json";
  CHECK_THROWS_AS(load_policy(fx.dir / "broken.json"), Error);
}

TEST_CASE("generate rolls out the requested windows") {
  Fixture fx("cli_generate", "synth.frames = 200\n");
  cmd_train(fx.run, fx.scene, fx.dir / "run");
  const fs::path ckpt = fx.dir / "run" / "checkpoint.json";
  const fs::path out = fx.dir / "gen.csv";
  cmd_generate(ckpt, fx.scene, 3, 50, 9, out);
  const auto scenes = data::load_trajectories(out);
  REQUIRE(scenes.size() == 1);
  REQUIRE(scenes[0].tracks.size() == 3);
  for (const auto& t : scenes[0].tracks) {
    CHECK(t.size() == 51);
    CHECK(t.vehicle_id >= 4);
  }
  const fs::path twin = fx.dir / "twin.csv";
  cmd_generate(ckpt, fx.scene, 3, 50, 9, twin);
  CHECK(slurp(twin) == slurp(out));
  CHECK(error_of([&] { cmd_generate(ckpt, fx.scene, 3, 5000, 9, twin); }).find("horizon") != std::string::npos);

  // Collapse the policy onto one component with a negligible spread.
  auto doc = nlohmann::json::parse(slurp(ckpt));
  doc["config"]["nets.sigma_min"] = "1e-12";
  auto& net = doc["networks"]["policy"];
  for (auto& v : net["policy.head.scales.w"]["values"]) v = 0.0;
  for (auto& v : net["policy.head.scales.b"]["values"]) v = -60.0;
  for (auto& v : net["policy.head.logits.w"]["values"]) v = 0.0;
  net["policy.head.logits.b"]["values"] = {80.0, 0.0};
  const fs::path frozen = fx.dir / "frozen.json";
  std::ofstream(frozen) << doc.dump();
  const fs::path a = fx.dir / "a.csv", b = fx.dir / "b.csv";
  // The longest usable horizon leaves one start per vehicle; seeds are
  // scanned until a second run picks the same one.
  cmd_generate(frozen, fx.scene, 1, 197, 1, a);
  double worst = INFINITY;
  for (std::uint64_t seed = 2; seed < 40 && !std::isfinite(worst); ++seed) {
    cmd_generate(frozen, fx.scene, 1, 197, seed, b);
    const auto ta = data::load_trajectories(a)[0].tracks[0];
    const auto tb = data::load_trajectories(b)[0].tracks[0];
    if (ta.frames.front() != tb.frames.front() || ta.x.front() != tb.x.front()) continue;
    worst = 0.0;
    for (std::size_t i = 0; i < ta.size(); ++i)
      worst = std::max({worst, std::abs(ta.x[i] - tb.x[i]), std::abs(ta.y[i] - tb.y[i])});
  }
  REQUIRE(std::isfinite(worst));
  CHECK(worst < 1e-3);
}

TEST_CASE("evaluate compares two trajectory files") {
  Fixture fx("cli_evaluate", "synth.frames = 60\n");
  const fs::path report = fx.dir / "self.txt";
  const auto self = cmd_evaluate(fx.scene, fx.scene, fx.run, report);
  for (const auto& f : self.features) {
    CHECK(std::abs(f.mmd) <= 1e-9);
    CHECK(std::abs(f.wd) <= 1e-9);
    CHECK(std::abs(f.kl) <= 1e-9);
    CHECK(std::abs(f.js) <= 1e-9);
  }
  CHECK(slurp(report).find("speed.mmd = ") != std::string::npos);
  CHECK(slurp(report).find("seed=5") != std::string::npos);

  // Every vehicle moves 0.1 m further per frame: +1 m/s at dt 0.1.
  auto scenes = data::load_trajectories(fx.scene);
  for (auto& t : scenes[0].tracks)
    for (std::size_t i = 0; i < t.size(); ++i) t.x[i] += 0.1 * static_cast<double>(i);
  const fs::path faster = fx.dir / "faster.csv";
  data::write_trajectories(faster, scenes, {});
  const auto shifted = cmd_evaluate(fx.scene, faster, fx.run, fx.dir / "shift.txt");
  CHECK(shifted.feature("speed").wd == doctest::Approx(1.0).epsilon(0.05));

  const fs::path broken = fx.dir / "broken.csv";
  std::ofstream(broken) << "# dt=0.1\nscene_id,vehicle_id,frame,y,lane\n1,1,0,0,0\n";
  CHECK(error_of([&] { cmd_evaluate(broken, fx.scene, fx.run, fx.dir / "x.txt"); }).find("'x'") != std::string::npos);
}

TEST_CASE("ablate runs all four configurations") {
  Fixture fx("cli_ablate");
  const fs::path out = fx.dir / "ablate";
  const auto rows = cmd_ablate(fx.run, fx.scene, out);
  REQUIRE(rows.size() == 4);
  for (const char* name : {"ppo_wgan", "ppo_only", "wgan_only", "neither"}) {
    INFO(name);
    CHECK(rows_of(out / (std::string("loss_") + name + ".csv")).size() == 2);
  }
  const auto summary = lines_of(out / "summary.csv");
  CHECK(summary[1] == "config,mmd,wd,kl,js,seconds");
  const auto body = rows_of(out / "summary.csv");
  REQUIRE(body.size() == 4);
  for (const std::string& r : body) CHECK(std::count(r.begin(), r.end(), ',') == 5);
  // Shared initialization: the first rollouts coincide, so configurations
  // with the same critic objective see identical first critic updates.
  CHECK(rows[0].reports[0].disc_loss == rows[2].reports[0].disc_loss);
  CHECK(rows[0].reports[0].mean_reward == rows[2].reports[0].mean_reward);
  CHECK(rows[1].reports[0].disc_loss == rows[3].reports[0].disc_loss);
  CHECK(rows[1].reports[0].mean_reward == rows[3].reports[0].mean_reward);
}
