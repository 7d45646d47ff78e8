#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "webrefine/hier_agent.hpp"
#include "webrefine/validator.hpp"
#include "webrefine/webmdp.hpp"

namespace webrefine {

struct RefineConfig {
  /// Total attempts including the first.
  int max_attempts = 2;
  ValidatorConfig validator;

  void validate() const;
};

struct Attempt {
  Trajectory trajectory;
  Verdict verdict;
  /// Differs from the configured modality when a screenshotless attempt fell
  /// back to the task log.
  Modality modality_used = Modality::TaskLogText;
};

struct RefinedOutcome {
  std::string task_id;
  std::vector<Attempt> attempts;
  std::optional<Verdict> final_verdict;
  int attempts_used = 0;
  bool refined = false;
  bool excluded_from_vision_metrics = false;
  /// Why the loop stopped early (environment, agent or validator failure).
  std::optional<std::string> error;
  /// Trajectory of the attempt that could not be validated, if any.
  std::optional<Trajectory> unvalidated;

  bool judged_complete() const { return final_verdict && final_verdict->was_completed; }
  /// Ground truth of the last trajectory when the environment reported one.
  std::optional<Label> final_oracle_label() const;
  const Trajectory* last_trajectory() const;
};

/// Runs, validates and, while the verdict is incomplete and attempts remain,
/// reruns with the rationale fed back to a fresh planner chat. Each attempt
/// gets a fresh environment from `make_env`.
RefinedOutcome run_with_refinement(const AgentBackends& agent, llm::Backend& validator_backend, const Task& task,
                                   const EnvironmentFactory& make_env, const AgentConfig& agent_cfg,
                                   const RefineConfig& refine_cfg, AuditLog* audit = nullptr);

/// <dir>/attempt_<k>/ trajectory archives plus <dir>/outcome.json.
void write_outcome_archive(const std::filesystem::path& dir, const Task& task, const RefinedOutcome& outcome);

struct OutcomeArchive {
  Task task;
  RefinedOutcome outcome;
};

OutcomeArchive read_outcome_archive(const std::filesystem::path& dir);

}  // namespace webrefine
