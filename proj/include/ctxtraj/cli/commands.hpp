// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ctxtraj/cli/checkpoint.hpp"
#include "ctxtraj/cli/settings.hpp"
#include "ctxtraj/gail/trainer.hpp"
#include "ctxtraj/metrics/metrics.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ctxtraj::cli {

namespace fs = std::filesystem;

/// Settings from `config_path` (defaults when empty) with an optional seed
/// override, validated, plus the provenance line they produce.
struct Resolved {
  Settings settings;
  Provenance provenance;
};
Resolved resolve(const std::string& config_path, std::optional<std::uint64_t> seed);

/// Fixed-seed comparison of policy rollouts against the logged expert over
/// `run.eval_count` windows of the training horizon.
metrics::MetricReport evaluate_policy(const gail::Trainer& trainer, const Settings& settings);

/// Writes a synthetic expert scene.
void cmd_synth(const Resolved& run, const fs::path& out);

struct TrainOutcome {
  std::vector<gail::IterationReport> reports;
  metrics::MetricReport initial;  // before the first update of this run
  metrics::MetricReport final;
};

/// Trains until `run.iterations` total iterations. Writes `loss.csv`,
/// `eval.csv` and `checkpoint.json` under `out_dir`. With `resume`, state and
/// settings come from that checkpoint and the CSVs are appended to.
TrainOutcome cmd_train(const Resolved& run, const fs::path& data, const fs::path& out_dir,
                       const std::optional<fs::path>& resume = std::nullopt);

/// `count` rollouts of `horizon` steps from random logged start states.
/// Generated vehicles get ids above every id in the scene.
void cmd_generate(const fs::path& checkpoint, const fs::path& scene, int count, long horizon,
                  std::optional<std::uint64_t> seed, const fs::path& out);

metrics::MetricReport cmd_evaluate(const fs::path& generated, const fs::path& reference, const Resolved& run,
                                   const fs::path& out);

struct AblationRow {
  std::string name;
  bool use_ppo = true;
  bool use_wgan_gp = true;
  std::vector<gail::IterationReport> reports;
  metrics::MetricReport report;
  double seconds = 0.0;
};

/// Trains the four PPO / WGAN-GP on-off combinations for `run.ablate_iterations`
/// each. Writes `loss_<name>.csv` per configuration and `summary.csv`.
std::vector<AblationRow> cmd_ablate(const Resolved& run, const fs::path& data, const fs::path& out_dir);

}  // namespace ctxtraj::cli
