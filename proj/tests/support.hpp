#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "webrefine/eval_harness.hpp"
#include "webrefine/hier_agent.hpp"
#include "webrefine/simweb.hpp"

namespace testsupport {

namespace fs = std::filesystem;

fs::path source_path(std::string_view rel);

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(std::string_view rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

std::map<std::string, std::shared_ptr<const webrefine::simweb::SiteScript>> hermetic_sites();
webrefine::EnvironmentFactory hermetic_env_factory();
std::vector<webrefine::Task> hermetic_tasks();
webrefine::Task hermetic_task(std::string_view id);

/// Same layout the CLI accepts for `--backend scripted:<file>`.
webrefine::BackendFactory scripted_backends(const nlohmann::json& doc);
webrefine::BackendFactory hermetic_backends();

/// Shipped prompts, a fixed clock and a retry policy that never sleeps.
webrefine::AgentConfig test_agent_config();
webrefine::llm::RetryPolicy no_sleep_retry(int max_retries = 3);

/// Compares `actual` with tests/golden/<name>. With WEBREFINE_UPDATE_GOLDEN=1
/// in the environment the file is rewritten instead and the check passes.
/// Returns an empty string on match, else a short description of the first
/// difference.
std::string check_golden(std::string_view name, std::string_view actual);

/// Validator prompt text recovered from its LaTeX source in fixtures/prompt_latex.
std::string decode_latex_prompt(std::string_view latex);
std::string latex_prompt(std::string_view file_name);

/// The task-0 instruction used by prompt goldens.
webrefine::Task golden_prompt_task();
webrefine::Trajectory golden_prompt_trajectory();

/// Request rendered as text with images shown as `[image <n>: <w>x<h>, <bytes> bytes]`.
std::string render_request(const webrefine::llm::ChatRequest& req);

}  // namespace testsupport
