// SPDX-License-Identifier: Apache-2.0
#include "ctxtraj/metrics/metrics.hpp"

#include "ctxtraj/data/csv.hpp"

#include <sstream>

namespace ctxtraj::metrics {

std::vector<FeatureSamples> feature_marginals(const std::vector<Trajectory>& trajectories, double dt) {
  if (!(dt > 0.0)) throw Error("metrics", "dt must be positive");
  if (trajectories.empty()) throw Error("metrics", "no trajectories to summarize");
  std::vector<double> speed, accel, dx, dy;
  for (std::size_t k = 0; k < trajectories.size(); ++k) {
    const Trajectory& tr = trajectories[k];
    if (tr.size() < 3)
      throw Error("metrics", "trajectory " + std::to_string(k) + " has " + std::to_string(tr.size()) +
                                 " samples; at least 3 are needed");
    double previous = 0.0;
    for (std::size_t i = 1; i < tr.size(); ++i) {
      const Eigen::Vector2d d = tr[i] - tr[i - 1];
      const double v = d.norm() / dt;
      speed.push_back(v);
      dx.push_back(d.x());
      dy.push_back(d.y());
      if (i >= 2) accel.push_back((v - previous) / dt);
      previous = v;
    }
  }
  auto to_vector = [](const std::vector<double>& v) {
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  return {{"speed", to_vector(speed)}, {"acceleration", to_vector(accel)}, {"dx", to_vector(dx)}, {"dy", to_vector(dy)}};
}

const FeatureMetrics& MetricReport::feature(const std::string& name) const {
  for (const auto& f : features)
    if (f.name == name) return f;
  throw Error("metrics", "no feature named '" + name + "' in report");
}

std::string MetricReport::serialize() const {
  std::ostringstream out;
  auto line = [&](const std::string& key, double value) {
    out << key << " = " << data::format_double(value) << '\n';
  };
  out << "settings.bins = " << settings.bins << '\n';
  line("settings.smoothing", settings.smoothing);
  out << "settings.seed = " << settings.seed << '\n';
  out << "settings.kernel = gaussian\n";
  out << "settings.bandwidth_rule = median\n";
  for (const auto& f : features) {
    line(f.name + ".mmd", f.mmd);
    line(f.name + ".wd", f.wd);
    line(f.name + ".kl", f.kl);
    line(f.name + ".js", f.js);
    line(f.name + ".bandwidth", f.bandwidth);
    line(f.name + ".hist_min", f.hist_min);
    line(f.name + ".hist_max", f.hist_max);
    out << f.name << ".generated_count = " << f.generated_count << '\n';
    out << f.name << ".reference_count = " << f.reference_count << '\n';
  }
  line("mean.mmd", mean.mmd);
  line("mean.wd", mean.wd);
  line("mean.kl", mean.kl);
  line("mean.js", mean.js);
  return out.str();
}

MetricReport compare(const std::vector<Trajectory>& generated, const std::vector<Trajectory>& reference, double dt,
                     const MetricSettings& settings) {
  const auto gen = feature_marginals(generated, dt);
  const auto ref = feature_marginals(reference, dt);
  MetricReport report;
  report.settings = settings;
  report.mean.name = "mean";
  for (std::size_t i = 0; i < gen.size(); ++i) {
    const Eigen::VectorXd& x = gen[i].values;
    const Eigen::VectorXd& y = ref[i].values;
    FeatureMetrics f;
    f.name = gen[i].name;
    f.bandwidth = median_bandwidth(x, y);
    f.mmd = mmd(x, y, f.bandwidth);
    f.wd = wasserstein_1d(x, y, settings.seed);
    f.kl = kl_hist(x, y, settings.bins, settings.smoothing);
    f.js = js(x, y, settings.bins);
    const auto bins = pooled_bins(x, y, settings.bins);
    f.hist_min = bins.lo;
    f.hist_max = bins.hi;
    f.generated_count = x.size();
    f.reference_count = y.size();
    report.mean.mmd += f.mmd;
    report.mean.wd += f.wd;
    report.mean.kl += f.kl;
    report.mean.js += f.js;
    report.features.push_back(std::move(f));
  }
  const auto n = static_cast<double>(report.features.size());
  report.mean.mmd /= n;
  report.mean.wd /= n;
  report.mean.kl /= n;
  report.mean.js /= n;
  return report;
}

double speed_mmd(const std::vector<Trajectory>& generated, const std::vector<Trajectory>& reference, double dt) {
  return mmd(feature_marginals(generated, dt).front().values, feature_marginals(reference, dt).front().values);
}

}  // namespace ctxtraj::metrics
