#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "webrefine/core_model.hpp"
#include "webrefine/llm_gateway.hpp"
#include "webrefine/webmdp.hpp"

namespace webrefine {

/// Planner reply: either the next high-level step or the end of the task.
struct NextStep {
  std::string text;
  bool operator==(const NextStep&) const = default;
};

struct Terminate {
  std::string final_response;
  bool operator==(const Terminate&) const = default;
};

using PlannerDirective = std::variant<NextStep, Terminate>;

inline constexpr std::string_view kTerminateSentinel = "##TERMINATE##";

struct AgentConfig {
  std::string planner_system_prompt;
  std::string browser_system_prompt;
  int max_planner_steps = 10;
  int max_actions_per_step = 8;
  bool screenshot_every_step = true;
  int screenshot_max_attempts = 3;
  std::string planner_model = "gpt-4-turbo";
  std::string browser_model = "gpt-4-turbo";
  double temperature = 0.2;
  int max_output_tokens = 1024;
  llm::RetryPolicy retry;
  /// Source of Trajectory::recorded_at; defaults to the wall clock.
  std::function<std::string()> clock;

  /// Defaults with the shipped planner/browser prompts.
  static AgentConfig with_default_prompts();
  void validate() const;
};

/// The two chat backends of the hierarchy; both may alias one object.
struct AgentBackends {
  std::shared_ptr<llm::Backend> planner;
  std::shared_ptr<llm::Backend> browser;
};

/// Parses a planner reply. A reply containing the sentinel terminates with the
/// text after it; anything else is a next step. Multi-line replies are kept
/// verbatim with a logged warning. Empty replies throw PlannerReplyError.
PlannerDirective parse_planner_reply(std::string_view reply);

/// Verifier message placed in a fresh planner chat before a reattempt.
std::string refinement_feedback_message(std::string_view rationale);

/// Asks the planner for the next step. Seeds an empty log with the task
/// message, appends the verifier feedback when given, then appends the
/// planner's reply.
PlannerDirective plan_next_step(llm::Backend& planner, const Task& task,
                                std::vector<ChatEntry>& planner_log,
                                const std::optional<std::string>& feedback, const AgentConfig& cfg);

struct BrowserDone {
  std::string summary;
  bool operator==(const BrowserDone&) const = default;
};

/// nullopt when the reply holds neither an `ACTION:` nor a `DONE:` line.
std::optional<std::variant<ActionCommand, BrowserDone>> parse_browser_reply(std::string_view reply);

struct DirectiveResult {
  StepRecord step;
  /// What the user proxy reports back to the planner.
  std::string summary;
  bool episode_done = false;
};

/// Runs the browser-agent / executor chat for one directive against `env`,
/// starting from `current`. Ends on DONE, on episode end, on environment
/// failure (recorded in step.error), or after max_actions_per_step turns.
DirectiveResult execute_directive(llm::Backend& browser, const NextStep& directive, WebEnvironment& env,
                                  const Observation& current, int step_index, const AgentConfig& cfg);

/// Full planner / browser hierarchy for one task attempt. Resets `env` first.
/// `feedback` is the previous attempt's validator rationale, if any.
Trajectory run_task(const AgentBackends& backends, const Task& task, WebEnvironment& env,
                    const AgentConfig& cfg, const std::optional<std::string>& feedback = std::nullopt);

}  // namespace webrefine
