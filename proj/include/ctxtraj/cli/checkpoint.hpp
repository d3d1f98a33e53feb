// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ctxtraj/cli/settings.hpp"
#include "ctxtraj/gail/trainer.hpp"

#include <filesystem>
#include <string>

namespace ctxtraj::cli {

inline constexpr int kCheckpointVersion = 1;

/// Where a run came from, recorded in every output.
struct Provenance {
  std::string config_path;
  std::string config_hash;
  std::uint64_t seed = 0;

  /// One-line `key=value` summary for header comments.
  std::string describe() const;
};

/// Serializes the trainer's complete state (parameters, optimizer moments,
/// standardizers, iteration, RNG) together with the settings snapshot.
std::string checkpoint_text(const gail::Trainer& trainer, const Settings& settings, const Provenance& provenance);
void save_checkpoint(const std::filesystem::path& path, const gail::Trainer& trainer, const Settings& settings,
                     const Provenance& provenance);

/// Settings snapshot stored in a checkpoint.
Settings checkpoint_settings(const std::filesystem::path& path);

/// Restores state saved by save_checkpoint into a trainer built with the same
/// network shapes. Fails on a version or shape mismatch.
void load_checkpoint(const std::filesystem::path& path, gail::Trainer& trainer);

/// The parts of a checkpoint needed to run the policy on new scenes.
struct PolicySnapshot {
  Settings settings;
  Provenance provenance;
  nets::PolicyNet policy;
  env::Standardizer observations;
  env::Standardizer actions;
  long iteration = 0;
};

PolicySnapshot load_policy(const std::filesystem::path& path);

}  // namespace ctxtraj::cli
