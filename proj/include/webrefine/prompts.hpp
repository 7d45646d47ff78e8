#pragma once

#include <string_view>
#include <vector>

namespace webrefine::prompts {

/// Prompt text shipped under assets/prompts/, embedded at build time.
/// `name` is the path relative to assets/prompts, e.g. "validator/close_vqa.txt".
/// Throws std::out_of_range for unknown names.
std::string_view asset(std::string_view name);

std::vector<std::string_view> asset_names();

inline std::string_view planner_system() { return asset("agent/planner_system.v1.txt"); }
inline std::string_view browser_system() { return asset("agent/browser_system.v1.txt"); }

inline std::string_view validator_intro_screenshots() { return asset("validator/intro_screenshots.txt"); }
inline std::string_view validator_close_screenshots() { return asset("validator/close_screenshots.txt"); }
inline std::string_view validator_close_vqa() { return asset("validator/close_vqa.txt"); }
inline std::string_view validator_intro_task_log() { return asset("validator/intro_task_log.txt"); }
inline std::string_view validator_close_task_log() { return asset("validator/close_task_log.txt"); }

/// Substitution slot in the validator intro prompts.
inline constexpr std::string_view kTaskSlot = "{task_descrip}";

}  // namespace webrefine::prompts
