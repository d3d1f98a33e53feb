// SPDX-License-Identifier: Apache-2.0
#include "ctxtraj/cli/checkpoint.hpp"

#include "ctxtraj/error.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace ctxtraj::cli {
namespace {

using nlohmann::json;

json matrix_json(const Eigen::MatrixXd& m) {
  json values = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) values.push_back(m(r, c));
  return {{"shape", {m.rows(), m.cols()}}, {"values", std::move(values)}};
}

Eigen::MatrixXd matrix_from(const json& j, const std::string& what) {
  const auto rows = j.at("shape").at(0).get<Eigen::Index>();
  const auto cols = j.at("shape").at(1).get<Eigen::Index>();
  const json& values = j.at("values");
  if (static_cast<Eigen::Index>(values.size()) != rows * cols)
    throw Error("cli", "checkpoint entry '" + what + "' has " + std::to_string(values.size()) + " values for shape " +
                           std::to_string(rows) + "x" + std::to_string(cols));
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = values.at(k++).get<double>();
  return m;
}

json params_json(const nets::ParameterSet& params) {
  json out = json::object();
  for (const auto& p : params.items()) out[p.name] = matrix_json(p.value);
  return out;
}

void restore_params(const json& j, nets::ParameterSet& params, const std::string& net) {
  if (j.size() != params.size())
    throw Error("cli", "checkpoint network '" + net + "' has " + std::to_string(j.size()) + " blocks, expected " +
                           std::to_string(params.size()));
  for (auto& p : params.items()) {
    if (!j.contains(p.name)) throw Error("cli", "checkpoint is missing parameter '" + p.name + "'");
    Eigen::MatrixXd m = matrix_from(j.at(p.name), p.name);
    if (m.rows() != p.value.rows() || m.cols() != p.value.cols())
      throw Error("cli", "checkpoint parameter '" + p.name + "' has shape " + std::to_string(m.rows()) + "x" +
                             std::to_string(m.cols()) + ", network expects " + std::to_string(p.value.rows()) + "x" +
                             std::to_string(p.value.cols()));
    p.value = std::move(m);
  }
}

json optimizer_json(const nets::Optimizer& opt, const nets::ParameterSet& params) {
  json first = json::object(), second = json::object();
  for (std::size_t i = 0; i < opt.first_moments().size(); ++i) {
    first[params[i].name] = matrix_json(opt.first_moments()[i]);
    second[params[i].name] = matrix_json(opt.second_moments()[i]);
  }
  return {{"kind", nets::to_string(opt.kind())}, {"steps", opt.steps()}, {"first", first}, {"second", second}};
}

void restore_optimizer(const json& j, nets::Optimizer& opt, const nets::ParameterSet& params) {
  if (j.at("kind").get<std::string>() != nets::to_string(opt.kind()))
    throw Error("cli", "checkpoint optimizer kind differs from the configured one");
  opt.set_steps(j.at("steps").get<long long>());
  for (std::size_t i = 0; i < opt.first_moments().size(); ++i) {
    opt.first_moments()[i] = matrix_from(j.at("first").at(params[i].name), params[i].name);
    opt.second_moments()[i] = matrix_from(j.at("second").at(params[i].name), params[i].name);
  }
}

json standardizer_json(const env::Standardizer& s) {
  return {{"mean", std::vector<double>(s.mean.data(), s.mean.data() + s.mean.size())},
          {"stddev", std::vector<double>(s.stddev.data(), s.stddev.data() + s.stddev.size())}};
}

env::Standardizer standardizer_from(const json& j, Eigen::Index expected) {
  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto sd = j.at("stddev").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(mean.size()) != expected || sd.size() != mean.size())
    throw Error("cli", "checkpoint standardizer has the wrong width");
  env::Standardizer s;
  s.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), expected);
  s.stddev = Eigen::Map<const Eigen::VectorXd>(sd.data(), expected);
  return s;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cli", "cannot open checkpoint '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("cli", "checkpoint '" + path.string() + "' is not valid JSON: " + e.what());
  }
  if (!j.contains("format_version") || j.at("format_version").get<int>() != kCheckpointVersion)
    throw Error("cli", "checkpoint '" + path.string() + "' has format version " +
                           (j.contains("format_version") ? j.at("format_version").dump() : std::string("none")) +
                           ", expected " + std::to_string(kCheckpointVersion));
  return j;
}

}  // namespace

std::string Provenance::describe() const {
  return "config=" + (config_path.empty() ? std::string("<defaults>") : config_path) + " config_hash=" + config_hash +
         " seed=" + std::to_string(seed);
}

std::string checkpoint_text(const gail::Trainer& t, const Settings& settings, const Provenance& provenance) {
  json config = json::object();
  for (const auto& [k, v] : settings.entries()) config[k] = v;
  json j = {
      {"format_version", kCheckpointVersion},
      {"provenance", {{"config_path", provenance.config_path}, {"config_hash", provenance.config_hash}, {"seed", provenance.seed}}},
      {"config", config},
      {"iteration", t.iteration()},
      {"rng", t.rng().state()},
      {"standardizer", standardizer_json(t.standardizer())},
      {"action_standardizer", standardizer_json(t.action_standardizer())},
      {"networks",
       {{"policy", params_json(t.policy().params())},
        {"policy_old", params_json(t.policy_old())},
        {"value", params_json(t.value().params())},
        {"disc", params_json(t.discriminator().params())}}},
      {"optimizers",
       {{"policy", optimizer_json(t.policy_optimizer(), t.policy().params())},
        {"value", optimizer_json(t.value_optimizer(), t.value().params())},
        {"disc", optimizer_json(t.disc_optimizer(), t.discriminator().params())}}},
  };
  return j.dump(1) + "\n";
}

void save_checkpoint(const std::filesystem::path& path, const gail::Trainer& trainer, const Settings& settings,
                     const Provenance& provenance) {
  const std::string text = checkpoint_text(trainer, settings, provenance);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cli", "cannot write checkpoint '" + path.string() + "'");
    out << text;
    if (!out) throw Error("cli", "failed writing checkpoint '" + path.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

Settings checkpoint_settings(const std::filesystem::path& path) {
  const json j = read_json(path);
  Settings s;
  for (const auto& [k, v] : j.at("config").items()) s.set(k, v.get<std::string>());
  return s;
}

void load_checkpoint(const std::filesystem::path& path, gail::Trainer& t) {
  const json j = read_json(path);
  try {
    const json& nets = j.at("networks");
    restore_params(nets.at("policy"), t.policy().params(), "policy");
    restore_params(nets.at("policy_old"), t.policy_old(), "policy_old");
    restore_params(nets.at("value"), t.value().params(), "value");
    restore_params(nets.at("disc"), t.discriminator().params(), "disc");
    const json& opts = j.at("optimizers");
    restore_optimizer(opts.at("policy"), t.policy_optimizer(), t.policy().params());
    restore_optimizer(opts.at("value"), t.value_optimizer(), t.value().params());
    restore_optimizer(opts.at("disc"), t.disc_optimizer(), t.discriminator().params());
    t.standardizer() = standardizer_from(j.at("standardizer"), t.standardizer().mean.size());
    t.action_standardizer() = standardizer_from(j.at("action_standardizer"), 2);
    t.restandardize();
    t.iteration() = j.at("iteration").get<long>();
    t.rng().set_state(j.at("rng").get<std::string>());
  } catch (const json::exception& e) {
    throw Error("cli", "checkpoint '" + path.string() + "' is malformed: " + e.what());
  }
}

PolicySnapshot load_policy(const std::filesystem::path& path) {
  const json j = read_json(path);
  PolicySnapshot out;
  try {
    for (const auto& [k, v] : j.at("config").items()) out.settings.set(k, v.get<std::string>());
    out.settings.finalize();
    const json& prov = j.at("provenance");
    out.provenance = {prov.at("config_path").get<std::string>(), prov.at("config_hash").get<std::string>(),
                      prov.at("seed").get<std::uint64_t>()};
    const Eigen::Index obs = env::observation_size(out.settings.env.lanes);
    Rng scratch(0);
    out.policy = nets::PolicyNet(obs, out.settings.train.net, scratch);
    restore_params(j.at("networks").at("policy"), out.policy.params(), "policy");
    out.observations = standardizer_from(j.at("standardizer"), obs);
    out.actions = standardizer_from(j.at("action_standardizer"), 2);
    out.iteration = j.at("iteration").get<long>();
  } catch (const json::exception& e) {
    throw Error("cli", "checkpoint '" + path.string() + "' is malformed: " + e.what());
  }
  return out;
}

}  // namespace ctxtraj::cli
