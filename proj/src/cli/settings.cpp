// SPDX-License-Identifier: Apache-2.0
#include "ctxtraj/cli/settings.hpp"

#include "ctxtraj/data/csv.hpp"
#include "ctxtraj/error.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace ctxtraj::cli {
namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw Error("cli", "config key '" + key + "' expects " + expected + ", got '" + value + "'");
}

template <class Int>
Int parse_int(const std::string& key, const std::string& value) {
  Int out{};
  const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || end != value.data() + value.size()) bad_value(key, value, "an integer");
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || end != value.data() + value.size()) bad_value(key, value, "a number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "true or false");
}

struct Binding {
  std::string key;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

template <class T>
Binding bind(std::string key, T& field) {
  Binding b;
  b.key = key;
  if constexpr (std::is_same_v<T, bool>) {
    b.set = [&field, key](const std::string& v) { field = parse_bool(key, v); };
    b.get = [&field] { return std::string(field ? "true" : "false"); };
  } else if constexpr (std::is_floating_point_v<T>) {
    b.set = [&field, key](const std::string& v) { field = parse_real(key, v); };
    b.get = [&field] { return data::format_double(field); };
  } else {
    b.set = [&field, key](const std::string& v) { field = parse_int<T>(key, v); };
    b.get = [&field] { return std::to_string(field); };
  }
  return b;
}

std::vector<Binding> bindings(Settings& s) {
  gail::TrainConfig& t = s.train;
  std::vector<Binding> out = {
      bind("seed", s.seed),

      bind("synth.lanes", s.synth.lanes),
      bind("synth.vehicles", s.synth.vehicles),
      bind("synth.frames", s.synth.frames),
      bind("synth.dt", s.synth.dt),
      bind("synth.lane_width", s.synth.lane_width),
      bind("synth.vehicle_length", s.synth.vehicle_length),
      bind("synth.period", s.synth.period),
      bind("synth.spawn_spacing", s.synth.spawn_spacing),
      bind("synth.scene_id", s.synth.scene_id),
      bind("idm.v0", s.synth.idm.v0),
      bind("idm.time_headway", s.synth.idm.T),
      bind("idm.a_max", s.synth.idm.a_max),
      bind("idm.b", s.synth.idm.b),
      bind("idm.s0", s.synth.idm.s0),
      bind("idm.delta", s.synth.idm.delta),

      bind("env.roi", s.env.roi),
      bind("env.displacement_cap", s.env.displacement_cap),
      bind("env.lanes", s.env.lanes),
      bind("env.lane_width", s.env.lane_width),

      bind("gail.lr_policy", t.lr_policy),
      bind("gail.lr_value", t.lr_value),
      bind("gail.lr_disc", t.lr_disc),
  };
  out.push_back({"gail.optimizer", [&t](const std::string& v) { t.optimizer = nets::parse_optimizer(v); },
                 [&t] { return nets::to_string(t.optimizer); }});
  out.push_back(bind("gail.ppo_epsilon", t.ppo_epsilon));
  out.push_back({"gail.clip_mode",
                 [&t](const std::string& v) {
                   if (v == "half_width") t.clip_mode = gail::ClipMode::HalfWidth;
                   else if (v == "bounds") t.clip_mode = gail::ClipMode::Bounds;
                   else bad_value("gail.clip_mode", v, "half_width or bounds");
                 },
                 [&t] { return std::string(t.clip_mode == gail::ClipMode::Bounds ? "bounds" : "half_width"); }});
  for (auto b : {
           bind("gail.clip_low", t.clip_low),
           bind("gail.clip_high", t.clip_high),
           bind("gail.gp_coefficient", t.gp_coefficient),
           bind("gail.gamma", t.gamma),
           bind("gail.gae_lambda", t.gae_lambda),
           bind("gail.c1", t.c1),
           bind("gail.c2", t.c2),
           bind("gail.normalize_advantages", t.normalize_advantages),
           bind("gail.normalize_rewards", t.normalize_rewards),
           bind("gail.disc_updates", t.disc_updates),
           bind("gail.ppo_epochs", t.ppo_epochs),
           bind("gail.max_grad_norm", t.max_grad_norm),
           bind("gail.batch", t.batch),
           bind("gail.horizon", t.horizon),
           bind("gail.use_ppo", t.use_ppo),
           bind("gail.use_wgan_gp", t.use_wgan_gp),

           bind("nets.hidden", t.net.hidden),
           bind("nets.layers", t.net.layers),
           bind("nets.components", t.net.components),
           bind("nets.sigma_min", t.net.sigma_min),
           bind("nets.disc_mlp", t.net.disc_mlp),
           bind("nets.initial_spread", t.net.initial_spread),
           bind("nets.mean_head_gain", t.net.mean_head_gain),

           bind("metrics.bins", s.metrics.bins),
           bind("metrics.smoothing", s.metrics.smoothing),

           bind("run.iterations", s.run.iterations),
           bind("run.checkpoint_every", s.run.checkpoint_every),
           bind("run.ablate_iterations", s.run.ablate_iterations),
           bind("run.eval_count", s.run.eval_count),
           bind("run.generate_count", s.run.generate_count),
           bind("run.generate_horizon", s.run.generate_horizon),
       })
    out.push_back(std::move(b));
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void Settings::set(const std::string& key, const std::string& value) {
  for (auto& b : bindings(*this)) {
    if (b.key == key) {
      b.set(value);
      return;
    }
  }
  throw Error("cli", "unknown config key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> Settings::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (auto& b : bindings(const_cast<Settings&>(*this))) out.emplace_back(b.key, b.get());
  return out;
}

std::string Settings::canonical() const {
  std::string out;
  for (const auto& [k, v] : entries()) out += k + "=" + v + "\n";
  return out;
}

void Settings::finalize() {
  train.seed = seed;
  synth.validate();
  env.validate();
  train.validate();
  if (metrics.bins < 1) throw Error("cli", "metrics.bins must be at least 1");
  if (!(metrics.smoothing > 0.0)) throw Error("cli", "metrics.smoothing must be positive");
  metrics.seed = seed;
  if (run.iterations < 0 || run.ablate_iterations < 0) throw Error("cli", "iteration counts must be nonnegative");
  if (run.checkpoint_every < 1) throw Error("cli", "run.checkpoint_every must be at least 1");
  if (run.eval_count < 1 || run.generate_count < 1) throw Error("cli", "evaluation and generation counts must be positive");
  if (run.generate_horizon < 1) throw Error("cli", "run.generate_horizon must be at least 1");
}

Settings parse_settings(const std::string& text, const std::string& origin) {
  Settings s;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("cli", origin + ":" + std::to_string(number) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      s.set(key, value);
    } catch (const Error& e) {
      throw Error("cli", origin + ":" + std::to_string(number) + ": " + std::string(e.what()).substr(5));
    }
  }
  return s;
}

Settings load_settings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cli", "cannot open config file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_settings(text.str(), path.string());
}

std::string fingerprint(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ctxtraj::cli
