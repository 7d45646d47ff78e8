#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "webrefine/core_model.hpp"
#include "webrefine/llm_gateway.hpp"

namespace webrefine {

struct ValidatorConfig {
  Modality modality = Modality::TaskLogText;
  /// Use the visual-question close prompt; vision modalities only.
  bool vqa_variant = false;
  int max_screenshots = 8;
  std::string backend_model_id = "gpt-4-turbo";
  double temperature = 0.0;
  int max_output_tokens = 1024;
  llm::RetryPolicy retry;

  void validate() const;
};

/// Captured screenshots in chronological order. When more than max_n are
/// captured, the first, the last and evenly spaced interior records are kept.
/// Throws ScreenshotlessTrajectory when none were captured and `modality`
/// needs screenshots; returns an empty list for the text modality.
std::vector<ScreenshotRecord> select_screenshots(const Trajectory& t, int max_n,
                                                 Modality modality = Modality::ScreenshotsVision);

/// Indices picked from `n` items when at most `max_n` are allowed.
std::vector<std::size_t> spread_indices(std::size_t n, std::size_t max_n);

/// Planner log rendered for the text validator: "<role>: <content>" entries
/// separated by blank lines.
std::string serialize_planner_log(const std::vector<ChatEntry>& log);

struct BuiltPrompt {
  llm::ChatRequest request;
  std::vector<std::string> warnings;
};

BuiltPrompt build_prompt(const ValidatorConfig& cfg, const Task& task, const Trajectory& t);

/// Never throws. See the README for the extraction order.
Verdict parse_verdict(std::string_view raw, bool vqa_expected);

inline constexpr std::size_t kFallbackRationaleBytes = 2048;

struct AuditRecord {
  std::string task_id;
  Modality modality = Modality::TaskLogText;
  llm::ChatRequest request;
  std::string raw_reply;
  Verdict verdict;
};

/// Append-only JSONL audit log, safe to share between workers. Image bytes are
/// recorded by size only.
class AuditLog {
 public:
  AuditLog() = default;
  explicit AuditLog(const std::filesystem::path& path);

  void record(const AuditRecord& rec);
  std::size_t size() const;
  std::vector<AuditRecord> records() const;

 private:
  mutable std::mutex mu_;
  std::vector<AuditRecord> records_;
  std::optional<std::ofstream> file_;
};

nlohmann::json audit_record_json(const AuditRecord& rec);

/// build_prompt, complete, parse_verdict. Records the exchange when `audit` is given.
Verdict validate(const ValidatorConfig& cfg, llm::Backend& backend, const Task& task, const Trajectory& t,
                 AuditLog* audit = nullptr);

nlohmann::json verdict_to_json(const Verdict& v);
Verdict verdict_from_json(const nlohmann::json& j);

}  // namespace webrefine
