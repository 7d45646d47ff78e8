#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "webrefine/core_model.hpp"

namespace webrefine {

/// Trajectory as JSON. Screenshot images are not inlined; each captured
/// record names its file relative to the archive root
/// (`shots/step_<i>_<attempts>.png`).
nlohmann::json trajectory_to_json(const Trajectory& t);

/// Inverse of trajectory_to_json; images are loaded relative to `root`.
/// Throws ArchiveError on malformed input or missing image files.
Trajectory trajectory_from_json(const nlohmann::json& j, const std::filesystem::path& root);

nlohmann::json task_to_json(const Task& task);
Task task_from_json(const nlohmann::json& j);

nlohmann::json action_to_json(const ActionCommand& a);
ActionCommand action_from_json(const nlohmann::json& j);

std::string screenshot_file_name(const ScreenshotRecord& s);

/// Writes task.json, trajectory.json and shots/ under `dir` (created as needed).
void write_trajectory_archive(const std::filesystem::path& dir, const Task& task, const Trajectory& t);

struct TrajectoryArchive {
  Task task;
  Trajectory trajectory;
};

TrajectoryArchive read_trajectory_archive(const std::filesystem::path& dir);

/// Directory-safe form of a task id (path separators and odd bytes become '_').
std::string archive_dir_name(std::string_view task_id);

/// Stable pretty-printed JSON text with a trailing newline.
std::string to_stable_text(const nlohmann::json& j);

void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace webrefine
