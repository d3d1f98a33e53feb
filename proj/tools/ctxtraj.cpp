// SPDX-License-Identifier: Apache-2.0
// Command-line front end: synth, train, generate, evaluate, ablate.
#include "ctxtraj/cli/commands.hpp"
#include "ctxtraj/error.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

using namespace ctxtraj;

struct Shared {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_shared(CLI::App* cmd, Shared& s, const char* out_help) {
  cmd->add_option("--config", s.config, "key=value config file (defaults when omitted)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", s.seed, "override the config seed");
  cmd->add_option("--out", s.out, out_help)->required();
}

void print_metrics(const metrics::MetricReport& r) {
  std::printf("%-14s %12s %12s %12s %12s\n", "feature", "mmd", "wd", "kl", "js");
  for (const auto& f : r.features) std::printf("%-14s %12.6g %12.6g %12.6g %12.6g\n", f.name.c_str(), f.mmd, f.wd, f.kl, f.js);
  std::printf("%-14s %12.6g %12.6g %12.6g %12.6g\n", "mean", r.mean.mmd, r.mean.wd, r.mean.kl, r.mean.js);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Context-conditioned vehicle trajectory generation by adversarial imitation"};
  app.require_subcommand(1);

  Shared synth_s;
  auto* synth = app.add_subcommand("synth", "write a synthetic car-following expert scene");
  add_shared(synth, synth_s, "output trajectory CSV");

  Shared train_s;
  std::string train_data, resume;
  auto* train = app.add_subcommand("train", "train the policy on expert trajectories");
  add_shared(train, train_s, "output directory");
  train->add_option("--data", train_data, "expert trajectory CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--resume", resume, "continue from this checkpoint")->check(CLI::ExistingFile);

  Shared gen_s;
  std::string checkpoint, scene;
  std::optional<int> count;
  std::optional<long> horizon;
  auto* generate = app.add_subcommand("generate", "roll out a trained policy in a scene");
  add_shared(generate, gen_s, "output trajectory CSV");
  generate->add_option("--checkpoint", checkpoint, "checkpoint written by train")->required()->check(CLI::ExistingFile);
  generate->add_option("--scene", scene, "scene CSV supplying start states and neighbors")->required()->check(CLI::ExistingFile);
  generate->add_option("--count", count, "number of trajectories");
  generate->add_option("--horizon", horizon, "steps per trajectory");

  Shared eval_s;
  std::string generated, reference;
  auto* evaluate = app.add_subcommand("evaluate", "compare feature distributions of two trajectory files");
  add_shared(evaluate, eval_s, "output metric report");
  evaluate->add_option("--generated", generated, "generated trajectory CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--reference", reference, "reference trajectory CSV")->required()->check(CLI::ExistingFile);

  Shared ablate_s;
  std::string ablate_data;
  auto* ablate = app.add_subcommand("ablate", "train the four PPO / WGAN-GP on-off combinations");
  add_shared(ablate, ablate_s, "output directory");
  ablate->add_option("--data", ablate_data, "expert trajectory CSV")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*synth) {
      cli::cmd_synth(cli::resolve(synth_s.config, synth_s.seed), synth_s.out);
    } else if (*train) {
      const auto run = cli::resolve(train_s.config, train_s.seed);
      const auto result = cli::cmd_train(run, train_data, train_s.out,
                                         resume.empty() ? std::nullopt : std::optional<cli::fs::path>(resume));
      std::printf("trained %zu iterations; speed mmd %.6g -> %.6g\n", result.reports.size(),
                  result.initial.feature("speed").mmd, result.final.feature("speed").mmd);
    } else if (*generate) {
      cli::Settings defaults = gen_s.config.empty() ? cli::checkpoint_settings(checkpoint) : cli::load_settings(gen_s.config);
      cli::cmd_generate(checkpoint, scene, count.value_or(defaults.run.generate_count),
                        horizon.value_or(defaults.run.generate_horizon), gen_s.seed, gen_s.out);
    } else if (*evaluate) {
      print_metrics(cli::cmd_evaluate(generated, reference, cli::resolve(eval_s.config, eval_s.seed), eval_s.out));
    } else if (*ablate) {
      const auto rows = cli::cmd_ablate(cli::resolve(ablate_s.config, ablate_s.seed), ablate_data, ablate_s.out);
      std::printf("%-10s %12s %12s %12s %12s %10s\n", "config", "mmd", "wd", "kl", "js", "seconds");
      for (const auto& r : rows)
        std::printf("%-10s %12.6g %12.6g %12.6g %12.6g %10.2f\n", r.name.c_str(), r.report.mean.mmd, r.report.mean.wd,
                    r.report.mean.kl, r.report.mean.js, r.seconds);
    }
  } catch (const ctxtraj::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: cli: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
