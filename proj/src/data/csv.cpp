// SPDX-License-Identifier: Apache-2.0
#include "ctxtraj/data/csv.hpp"

#include "ctxtraj/error.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace ctxtraj::data {
namespace {

constexpr std::array<const char*, 6> kColumns = {"scene_id", "vehicle_id", "frame", "x", "y", "lane"};

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  return s.substr(i);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

[[noreturn]] void fail(std::size_t line, const std::string& message) {
  throw Error("data", "line " + std::to_string(line) + ": " + message);
}

template <class T>
T parse_number(const std::string& text, std::size_t line, const char* column) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty())
    fail(line, std::string("cannot parse ") + column + " value '" + text + "'");
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) fail(line, std::string("non-finite ") + column + " value");
  }
  return value;
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::vector<Scene> load_trajectories(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("data", "cannot open " + path.string());

  std::optional<double> dt;
  std::optional<std::array<std::size_t, 6>> column_of;
  std::map<std::pair<int, int>, Track> tracks;
  std::string raw;
  std::size_t line_no = 0;

  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto pos = line.find("dt=");
      if (!dt && pos != std::string::npos) {
        dt = parse_number<double>(trim(line.substr(pos + 3)), line_no, "dt");
        if (!(*dt > 0.0)) fail(line_no, "dt must be positive");
      }
      continue;
    }
    const auto fields = split(line);
    if (!column_of) {
      std::array<std::size_t, 6> cols{};
      for (std::size_t c = 0; c < kColumns.size(); ++c) {
        const auto it = std::find(fields.begin(), fields.end(), kColumns[c]);
        if (it == fields.end()) fail(line_no, std::string("missing column '") + kColumns[c] + "'");
        cols[c] = static_cast<std::size_t>(it - fields.begin());
      }
      column_of = cols;
      continue;
    }
    const auto& cols = *column_of;
    auto field = [&](std::size_t c) -> const std::string& {
      if (cols[c] >= fields.size()) fail(line_no, std::string("missing value for ") + kColumns[c]);
      return fields[cols[c]];
    };
    const int scene_id = parse_number<int>(field(0), line_no, kColumns[0]);
    const int vehicle_id = parse_number<int>(field(1), line_no, kColumns[1]);
    const long frame = parse_number<long>(field(2), line_no, kColumns[2]);
    const double x = parse_number<double>(field(3), line_no, kColumns[3]);
    const double y = parse_number<double>(field(4), line_no, kColumns[4]);
    const int lane = parse_number<int>(field(5), line_no, kColumns[5]);
    if (lane < 0) fail(line_no, "negative lane index");

    Track& t = tracks[{scene_id, vehicle_id}];
    t.vehicle_id = vehicle_id;
    if (!t.frames.empty()) {
      if (frame == t.frames.back() || t.index_of(frame))
        fail(line_no, "duplicate row for scene " + std::to_string(scene_id) + " vehicle " + std::to_string(vehicle_id) +
                          " frame " + std::to_string(frame));
      if (frame < t.frames.back())
        fail(line_no, "non-monotone frames for scene " + std::to_string(scene_id) + " vehicle " +
                          std::to_string(vehicle_id) + " (" + std::to_string(frame) + " after " +
                          std::to_string(t.frames.back()) + ")");
    }
    t.frames.push_back(frame);
    t.x.push_back(x);
    t.y.push_back(y);
    t.lane.push_back(lane);
  }

  if (!column_of) throw Error("data", path.string() + ": missing header row");
  if (!dt) throw Error("data", path.string() + ": missing '# dt=<seconds>' metadata line");
  if (tracks.empty()) throw Error("data", path.string() + ": no tracks");

  std::vector<Scene> scenes;
  for (auto& [key, track] : tracks) {
    if (scenes.empty() || scenes.back().scene_id != key.first) {
      scenes.push_back(Scene{key.first, *dt, {}});
    }
    scenes.back().tracks.push_back(std::move(track));
  }
  return scenes;
}

void write_trajectories(const std::filesystem::path& path, const std::vector<Scene>& scenes,
                        const std::vector<std::string>& comments) {
  if (scenes.empty()) throw Error("data", "nothing to write");
  const double dt = scenes.front().dt;
  for (const Scene& s : scenes)
    if (s.dt != dt) throw Error("data", "scenes with different dt cannot share a file");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("data", "cannot write " + path.string());
  out << "# dt=" << format_double(dt) << "\n";
  for (const std::string& c : comments) out << "# " << c << "\n";
  out << kCsvHeader << "\n";
  for (const Scene& s : scenes) {
    for (const Track& t : s.tracks) {
      for (std::size_t i = 0; i < t.size(); ++i) {
        out << s.scene_id << ',' << t.vehicle_id << ',' << t.frames[i] << ',' << format_double(t.x[i]) << ','
            << format_double(t.y[i]) << ',' << t.lane[i] << '\n';
      }
    }
  }
  if (!out) throw Error("data", "write failed for " + path.string());
}

}  // namespace ctxtraj::data
