#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace webrefine {

using Bytes = std::vector<std::uint8_t>;

/// One benchmark item.
struct Task {
  std::string id;
  std::string site;
  std::string instruction;
  std::string start_url;

  bool operator==(const Task&) const = default;
};

/// Violations of Task invariants (empty when valid). Uniqueness is a suite
/// property and is checked by the loader.
std::vector<std::string> validate_task(const Task& task);

/// True for `scheme://host[...]` with an alphabetic scheme and non-empty host.
bool is_url(std::string_view text);

// ---------------------------------------------------------------------------
// Actions

enum class ScrollDirection { Up, Down };

namespace action {
struct Navigate {
  std::string url;
  bool operator==(const Navigate&) const = default;
};
struct Click {
  std::string ref;
  bool operator==(const Click&) const = default;
};
struct Type {
  std::string ref;
  std::string text;
  bool operator==(const Type&) const = default;
};
struct PressEnter {
  bool operator==(const PressEnter&) const = default;
};
struct Scroll {
  ScrollDirection direction = ScrollDirection::Down;
  bool operator==(const Scroll&) const = default;
};
struct ReadText {
  std::string ref;
  bool operator==(const ReadText&) const = default;
};
struct Stop {
  bool operator==(const Stop&) const = default;
};
}  // namespace action

using ActionCommand = std::variant<action::Navigate, action::Click, action::Type, action::PressEnter,
                                   action::Scroll, action::ReadText, action::Stop>;

/// Empty when the command is well-formed (element refs present where required).
std::vector<std::string> validate_action(const ActionCommand& command);

/// Canonical grammar form without the `ACTION:` prefix, e.g. `type search_box white shoes`.
std::string format_action(const ActionCommand& command);

/// Inverse of format_action. Verbs are case-insensitive; returns nullopt on
/// unknown verbs or missing operands.
std::optional<ActionCommand> parse_action(std::string_view text);

// ---------------------------------------------------------------------------
// Observations and trajectories

struct ScreenshotRecord {
  int step_index = 0;
  Bytes image;
  int attempts_used = 1;
  bool captured = false;

  bool operator==(const ScreenshotRecord&) const = default;
};

struct Observation {
  std::string url;
  std::string title;
  std::string distilled_dom;
  /// In-band result of the action that produced this observation
  /// (e.g. "action failed: no such element"); empty after reset.
  std::string feedback;
  std::optional<ScreenshotRecord> screenshot;

  bool operator==(const Observation&) const = default;
};

enum class ChatRole { Planner, UserProxy, BrowserAgent, Executor, Verifier };

std::string_view to_string(ChatRole role);
std::optional<ChatRole> parse_chat_role(std::string_view text);

struct ChatEntry {
  ChatRole role = ChatRole::Planner;
  std::string content;

  bool operator==(const ChatEntry&) const = default;
};

struct ActionOutcome {
  ActionCommand command;
  /// Low-level observation summary returned by the executor.
  std::string summary;

  bool operator==(const ActionOutcome&) const = default;
};

struct StepRecord {
  int index = 0;
  std::string directive;
  std::vector<ActionOutcome> actions;
  /// Browser agent / executor conversation for this step.
  std::vector<ChatEntry> sub_log;
  Observation observation_after;
  /// Set when the environment failed during this step.
  std::optional<std::string> error;

  bool operator==(const StepRecord&) const = default;
};

enum class Termination { AgentDeclaredDone, StepBudgetExhausted, EnvironmentError };

std::string_view to_string(Termination termination);
std::optional<Termination> parse_termination(std::string_view text);

enum class Label { Complete, Incomplete };

std::string_view to_string(Label label);
std::optional<Label> parse_label(std::string_view text);

struct Trajectory {
  std::string task_id;
  std::vector<ChatEntry> planner_log;
  std::vector<StepRecord> steps;
  std::vector<ScreenshotRecord> screenshots;
  std::optional<std::string> final_response;
  Termination termination = Termination::StepBudgetExhausted;
  /// ISO-8601 UTC.
  std::string recorded_at;
  /// Ground truth reported by a simulated environment; absent for live runs.
  std::optional<Label> oracle_label;

  bool operator==(const Trajectory&) const = default;
};

/// Names every violated Trajectory invariant as "<field>: <rule>"; empty iff valid.
std::vector<std::string> validate_trajectory(const Trajectory& trajectory);

// ---------------------------------------------------------------------------
// Validation

enum class ParseStatus { ParsedClean, ParsedFromFence, FallbackIncomplete };

std::string_view to_string(ParseStatus status);
std::optional<ParseStatus> parse_parse_status(std::string_view text);

struct VisualQuestion {
  std::string question;
  std::string answer;

  bool operator==(const VisualQuestion&) const = default;
};

struct Verdict {
  bool was_completed = false;
  std::string rationale;
  std::optional<std::vector<VisualQuestion>> visual_questions;
  ParseStatus parse_status = ParseStatus::FallbackIncomplete;

  bool operator==(const Verdict&) const = default;
};

enum class Modality { TaskLogText, ScreenshotsVision, ScreenshotsPlusFinalResponse };

/// CLI spelling: task-log | screenshots | multimodal.
std::string_view to_string(Modality modality);
std::optional<Modality> parse_modality(std::string_view text);
bool uses_screenshots(Modality modality);

/// Current wall-clock time as ISO-8601 UTC with second precision.
std::string utc_now_iso8601();

}  // namespace webrefine
