// SPDX-License-Identifier: Apache-2.0
#include "ctxtraj/cli/commands.hpp"

#include "ctxtraj/data/csv.hpp"
#include "ctxtraj/data/idm.hpp"
#include "ctxtraj/error.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>

namespace ctxtraj::cli {
namespace {

constexpr const char* kLossHeader = "iter,disc_loss,policy_loss,value_loss,entropy,mean_reward";
constexpr const char* kEvalHeader = "iteration,speed_mmd,mmd,wd,kl,js";
constexpr std::uint64_t kEvalStream = 0x5eed0e7a1ull;

using data::format_double;

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error("cli", "cannot create output directory '" + dir.string() + "'");
}

/// CSV that is created with provenance comments and a header, or appended to.
class CsvLog {
 public:
  CsvLog(const fs::path& path, const Provenance& provenance, const char* header, bool append) {
    const bool fresh = !append || !fs::exists(path);
    out_.open(path, fresh ? std::ios::trunc : std::ios::app);
    if (!out_) throw Error("cli", "cannot write '" + path.string() + "'");
    if (fresh) out_ << "# " << provenance.describe() << "\n" << header << "\n";
    out_.flush();
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) out_ << (i ? "," : "") << fields[i];
    out_ << "\n";
    out_.flush();
  }

 private:
  std::ofstream out_;
};

void log_report(CsvLog& log, const gail::IterationReport& r) {
  log.row({std::to_string(r.iteration), format_double(r.disc_loss), format_double(r.policy_loss),
           format_double(r.value_loss), format_double(r.entropy), format_double(r.mean_reward)});
}

void log_eval(CsvLog& log, long iteration, const metrics::MetricReport& m) {
  log.row({std::to_string(iteration), format_double(m.feature("speed").mmd), format_double(m.mean.mmd),
           format_double(m.mean.wd), format_double(m.mean.kl), format_double(m.mean.js)});
}

gail::IterationReport iterate_with_context(gail::Trainer& trainer) {
  const long it = trainer.iteration();
  try {
    return trainer.iterate();
  } catch (const Error& e) {
    throw Error(e.module(), "iteration " + std::to_string(it) + ": " + std::string(e.what()).substr(e.module().size() + 2));
  }
}

std::vector<metrics::Trajectory> tracks_of(const std::vector<data::Scene>& scenes) {
  std::vector<metrics::Trajectory> out;
  for (const auto& s : scenes)
    for (const auto& t : s.tracks) {
      metrics::Trajectory traj;
      for (std::size_t i = 0; i < t.size(); ++i) traj.push_back(t.position(i));
      out.push_back(std::move(traj));
    }
  return out;
}

double shared_dt(const std::vector<data::Scene>& scenes, const fs::path& path) {
  const double dt = scenes.front().dt;
  for (const auto& s : scenes)
    if (s.dt != dt) throw Error("cli", "'" + path.string() + "' mixes time steps");
  return dt;
}

}  // namespace

Resolved resolve(const std::string& config_path, std::optional<std::uint64_t> seed) {
  Resolved r;
  if (!config_path.empty()) r.settings = load_settings(config_path);
  if (seed) r.settings.seed = *seed;
  r.settings.finalize();
  r.provenance = {config_path, fingerprint(r.settings.canonical()), r.settings.seed};
  return r;
}

metrics::MetricReport evaluate_policy(const gail::Trainer& trainer, const Settings& settings) {
  Rng rng(settings.seed ^ kEvalStream);
  const auto starts = trainer.sample_windows(static_cast<std::size_t>(settings.run.eval_count), rng);
  const long horizon = settings.train.horizon;
  std::vector<metrics::Trajectory> generated;
  for (auto& g : trainer.generate(starts, horizon, rng)) generated.push_back(std::move(g.positions));
  const auto reference = trainer.expert_positions(starts, horizon);
  return metrics::compare(generated, reference, trainer.env_config().dt, settings.metrics);
}

void cmd_synth(const Resolved& run, const fs::path& out) {
  Rng rng(run.settings.seed);
  const data::Scene scene = data::synth_experts(run.settings.synth, rng);
  data::write_trajectories(out, {scene}, {run.provenance.describe()});
}

TrainOutcome cmd_train(const Resolved& run, const fs::path& data, const fs::path& out_dir,
                       const std::optional<fs::path>& resume) {
  Settings settings = run.settings;
  Provenance provenance = run.provenance;
  if (resume) {
    settings = checkpoint_settings(*resume);
    settings.run = run.settings.run;
    settings.finalize();
  }
  ensure_dir(out_dir);
  gail::Trainer trainer(settings.train, settings.env, data::load_trajectories(data));
  if (resume) load_checkpoint(*resume, trainer);

  CsvLog loss(out_dir / "loss.csv", provenance, kLossHeader, resume.has_value());
  CsvLog eval(out_dir / "eval.csv", provenance, kEvalHeader, resume.has_value());
  const fs::path checkpoint = out_dir / "checkpoint.json";

  TrainOutcome out;
  out.initial = evaluate_policy(trainer, settings);
  if (!resume) log_eval(eval, trainer.iteration(), out.initial);
  while (trainer.iteration() < settings.run.iterations) {
    out.reports.push_back(iterate_with_context(trainer));
    log_report(loss, out.reports.back());
    if (trainer.iteration() % settings.run.checkpoint_every == 0 || trainer.iteration() == settings.run.iterations) {
      save_checkpoint(checkpoint, trainer, settings, provenance);
      log_eval(eval, trainer.iteration(), evaluate_policy(trainer, settings));
    }
  }
  out.final = evaluate_policy(trainer, settings);
  if (out.reports.empty()) save_checkpoint(checkpoint, trainer, settings, provenance);
  return out;
}

void cmd_generate(const fs::path& checkpoint, const fs::path& scene_path, int count, long horizon,
                  std::optional<std::uint64_t> seed, const fs::path& out) {
  if (count < 1) throw Error("cli", "count must be at least 1");
  if (horizon < 1) throw Error("cli", "horizon must be at least 1");
  const PolicySnapshot snap = load_policy(checkpoint);
  const std::vector<data::Scene> scenes = data::load_trajectories(scene_path);
  const double dt = shared_dt(scenes, scene_path);
  env::EnvConfig env = snap.settings.env;
  if (dt != env.dt)
    throw Error("cli", "scene dt " + format_double(dt) + " differs from the trained dt " + format_double(env.dt));

  // Start states need two earlier contiguous samples for their kinematics,
  // and the scene must cover the whole horizon for the replayed neighbors.
  std::vector<std::pair<std::size_t, env::RolloutStart>> candidates;
  int next_id = 0;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const long last = scenes[s].last_frame();
    for (const auto& t : scenes[s].tracks) {
      next_id = std::max(next_id, t.vehicle_id + 1);
      for (std::size_t i = 2; i < t.size(); ++i)
        if (t.frames[i] - t.frames[i - 2] == 2 && t.frames[i] + horizon <= last)
          candidates.push_back({s, {t.vehicle_id, t.frames[i]}});
    }
  }
  if (candidates.empty())
    throw Error("cli", "horizon " + std::to_string(horizon) + " exceeds every usable start in '" +
                           scene_path.string() + "'");

  Rng rng(seed.value_or(snap.settings.seed));
  std::vector<std::size_t> picks;
  for (int k = 0; k < count; ++k) picks.push_back(rng.index(candidates.size()));

  gail::NetPolicy policy(snap.policy, env.displacement_cap, snap.actions);
  gail::RolloutBuffer scratch;
  std::vector<data::Scene> generated;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    std::vector<env::RolloutStart> group;
    for (std::size_t p : picks)
      if (candidates[p].first == s) group.push_back(candidates[p].second);
    if (group.empty()) continue;
    data::Scene scene;
    scene.scene_id = scenes[s].scene_id;
    scene.dt = dt;
    for (auto& g : env::rollout(policy, scenes[s], group, horizon, env, snap.observations, rng, scratch)) {
      data::Track t;
      t.vehicle_id = next_id++;
      for (std::size_t i = 0; i < g.positions.size(); ++i) {
        t.frames.push_back(g.start_frame + static_cast<long>(i));
        t.x.push_back(g.positions[i].x());
        t.y.push_back(g.positions[i].y());
        t.lane.push_back(g.lanes[i]);
      }
      scene.tracks.push_back(std::move(t));
    }
    generated.push_back(std::move(scene));
  }
  Provenance p = snap.provenance;
  p.seed = seed.value_or(snap.settings.seed);
  data::write_trajectories(out, generated,
                           {p.describe(), "checkpoint=" + checkpoint.string() + " iteration=" +
                                              std::to_string(snap.iteration)});
}

metrics::MetricReport cmd_evaluate(const fs::path& generated, const fs::path& reference, const Resolved& run,
                                   const fs::path& out) {
  const auto gen = data::load_trajectories(generated);
  const auto ref = data::load_trajectories(reference);
  const double dt = shared_dt(gen, generated);
  if (shared_dt(ref, reference) != dt)
    throw Error("cli", "generated and reference files use different time steps");
  metrics::MetricReport report = metrics::compare(tracks_of(gen), tracks_of(ref), dt, run.settings.metrics);
  std::ofstream file(out, std::ios::trunc);
  if (!file) throw Error("cli", "cannot write '" + out.string() + "'");
  file << "# " << run.provenance.describe() << "\n# generated=" << generated.string()
       << " reference=" << reference.string() << "\n"
       << report.serialize();
  if (!file) throw Error("cli", "failed writing '" + out.string() + "'");
  return report;
}

std::vector<AblationRow> cmd_ablate(const Resolved& run, const fs::path& data, const fs::path& out_dir) {
  ensure_dir(out_dir);
  const std::vector<data::Scene> scenes = data::load_trajectories(data);
  std::vector<AblationRow> rows = {
      {"ppo_wgan", true, true, {}, {}, 0.0},
      {"ppo_only", true, false, {}, {}, 0.0},
      {"wgan_only", false, true, {}, {}, 0.0},
      {"neither", false, false, {}, {}, 0.0},
  };
  CsvLog summary(out_dir / "summary.csv", run.provenance, "config,mmd,wd,kl,js,seconds", false);
  for (AblationRow& row : rows) {
    Settings s = run.settings;
    s.train.use_ppo = row.use_ppo;
    s.train.use_wgan_gp = row.use_wgan_gp;
    const auto started = std::chrono::steady_clock::now();
    gail::Trainer trainer(s.train, s.env, scenes);
    CsvLog loss(out_dir / ("loss_" + row.name + ".csv"), run.provenance, kLossHeader, false);
    for (long i = 0; i < s.run.ablate_iterations; ++i) {
      row.reports.push_back(iterate_with_context(trainer));
      log_report(loss, row.reports.back());
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    row.report = evaluate_policy(trainer, s);
    summary.row({row.name, format_double(row.report.mean.mmd), format_double(row.report.mean.wd),
                 format_double(row.report.mean.kl), format_double(row.report.mean.js), format_double(row.seconds)});
  }
  return rows;
}

}  // namespace ctxtraj::cli
