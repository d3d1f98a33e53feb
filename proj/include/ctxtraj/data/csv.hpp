// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ctxtraj/data/scene.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace ctxtraj::data {

/// Header row of every trajectory file, preceded by a `# dt=<seconds>` line.
inline constexpr const char* kCsvHeader = "scene_id,vehicle_id,frame,x,y,lane";

/// Reads a trajectory file. Rows are grouped into scenes and tracks by
/// (scene_id, vehicle_id); within a track, frames must appear in strictly
/// increasing order. Errors carry the offending line number.
std::vector<Scene> load_trajectories(const std::filesystem::path& path);

/// Writes scenes in the same schema. `comments` become extra `# ` lines after
/// the dt line. All scenes must share one dt.
void write_trajectories(const std::filesystem::path& path, const std::vector<Scene>& scenes,
                        const std::vector<std::string>& comments = {});

/// Shortest exact decimal for a double (round-trips bit-identically).
std::string format_double(double v);

}  // namespace ctxtraj::data
