// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ctxtraj/data/idm.hpp"
#include "ctxtraj/env/environment.hpp"
#include "ctxtraj/gail/config.hpp"
#include "ctxtraj/metrics/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace ctxtraj::cli {

/// Run lengths and sizes for the subcommands.
struct RunSettings {
  long iterations = 300;
  long checkpoint_every = 50;
  long ablate_iterations = 30;
  int eval_count = 32;        // windows compared by evaluation inside train/ablate
  int generate_count = 8;
  long generate_horizon = 64;
};

/// Everything a config file can set. Keys are dotted: `gail.ppo_epsilon`.
struct Settings {
  std::uint64_t seed = 7;
  data::SynthConfig synth;
  env::EnvConfig env;
  gail::TrainConfig train;
  metrics::MetricSettings metrics;
  RunSettings run;

  /// Sets one key from its text value; unknown keys and malformed values throw.
  void set(const std::string& key, const std::string& value);
  /// Every key with its current value, in a fixed order.
  std::vector<std::pair<std::string, std::string>> entries() const;
  /// entries() as `key=value` lines.
  std::string canonical() const;
  /// Propagates the shared seed into the per-module configs and validates them.
  void finalize();
};

/// Parses `key=value` lines; `#` starts a comment, blank lines are ignored.
/// `origin` names the source in error messages.
Settings parse_settings(const std::string& text, const std::string& origin = "config");
Settings load_settings(const std::filesystem::path& path);

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string fingerprint(const std::string& text);

}  // namespace ctxtraj::cli
