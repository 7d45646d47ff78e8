#include "webrefine/core_model.hpp"

#include <array>
#include <cctype>
#include <chrono>
#include <ctime>

#include "webrefine/text.hpp"

namespace webrefine {

namespace {

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<std::pair<Enum, std::string_view>, N>& table,
                           std::string_view text) {
  for (const auto& [value, name] : table) {
    if (name == text) return value;
  }
  return std::nullopt;
}

template <typename Enum, std::size_t N>
std::string_view name_of(const std::array<std::pair<Enum, std::string_view>, N>& table, Enum value) {
  for (const auto& [v, name] : table) {
    if (v == value) return name;
  }
  return "unknown";
}

constexpr std::array<std::pair<ChatRole, std::string_view>, 5> kRoles{{
    {ChatRole::Planner, "planner"},
    {ChatRole::UserProxy, "user_proxy"},
    {ChatRole::BrowserAgent, "browser_agent"},
    {ChatRole::Executor, "executor"},
    {ChatRole::Verifier, "verifier"},
}};

constexpr std::array<std::pair<Termination, std::string_view>, 3> kTerminations{{
    {Termination::AgentDeclaredDone, "agent_declared_done"},
    {Termination::StepBudgetExhausted, "step_budget_exhausted"},
    {Termination::EnvironmentError, "environment_error"},
}};

constexpr std::array<std::pair<Label, std::string_view>, 2> kLabels{{
    {Label::Complete, "complete"},
    {Label::Incomplete, "incomplete"},
}};

constexpr std::array<std::pair<ParseStatus, std::string_view>, 3> kParseStatuses{{
    {ParseStatus::ParsedClean, "parsed_clean"},
    {ParseStatus::ParsedFromFence, "parsed_from_fence"},
    {ParseStatus::FallbackIncomplete, "fallback_incomplete"},
}};

constexpr std::array<std::pair<Modality, std::string_view>, 3> kModalities{{
    {Modality::TaskLogText, "task-log"},
    {Modality::ScreenshotsVision, "screenshots"},
    {Modality::ScreenshotsPlusFinalResponse, "multimodal"},
}};

std::string_view next_token(std::string_view& rest) {
  rest = text::trim(rest);
  auto end = rest.find_first_of(" \t");
  auto token = rest.substr(0, end);
  rest = end == std::string_view::npos ? std::string_view{} : rest.substr(end);
  return token;
}

}  // namespace

std::string_view to_string(ChatRole role) { return name_of(kRoles, role); }
std::optional<ChatRole> parse_chat_role(std::string_view text) { return lookup(kRoles, text); }
std::string_view to_string(Termination t) { return name_of(kTerminations, t); }
std::optional<Termination> parse_termination(std::string_view text) {
  return lookup(kTerminations, text);
}
std::string_view to_string(Label label) { return name_of(kLabels, label); }
std::optional<Label> parse_label(std::string_view text) { return lookup(kLabels, text); }
std::string_view to_string(ParseStatus status) { return name_of(kParseStatuses, status); }
std::optional<ParseStatus> parse_parse_status(std::string_view text) {
  return lookup(kParseStatuses, text);
}
std::string_view to_string(Modality modality) { return name_of(kModalities, modality); }
std::optional<Modality> parse_modality(std::string_view text) { return lookup(kModalities, text); }

bool uses_screenshots(Modality modality) { return modality != Modality::TaskLogText; }

bool is_url(std::string_view s) {
  auto sep = s.find("://");
  if (sep == std::string_view::npos || sep == 0) return false;
  for (std::size_t i = 0; i < sep; ++i) {
    char c = s[i];
    bool ok = std::isalpha(static_cast<unsigned char>(c)) ||
              (i > 0 && (std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.'));
    if (!ok) return false;
  }
  auto host = s.substr(sep + 3);
  host = host.substr(0, host.find_first_of("/?#"));
  if (host.empty()) return false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

std::vector<std::string> validate_task(const Task& task) {
  std::vector<std::string> out;
  if (task.id.empty()) out.emplace_back("id: must be non-empty");
  if (text::trim(task.instruction).empty()) out.emplace_back("instruction: must be non-empty");
  if (!is_url(task.start_url)) out.emplace_back("start_url: not a URL: '" + task.start_url + "'");
  return out;
}

std::vector<std::string> validate_action(const ActionCommand& command) {
  std::vector<std::string> out;
  std::visit(
      [&](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, action::Click> || std::is_same_v<T, action::Type> ||
                      std::is_same_v<T, action::ReadText>) {
          if (a.ref.empty()) out.emplace_back("element_ref: required for " + format_action(command));
        } else if constexpr (std::is_same_v<T, action::Navigate>) {
          if (a.url.empty()) out.emplace_back("url: required for navigate");
        }
      },
      command);
  return out;
}

std::string format_action(const ActionCommand& command) {
  return std::visit(
      [](const auto& a) -> std::string {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, action::Navigate>) {
          return "navigate " + a.url;
        } else if constexpr (std::is_same_v<T, action::Click>) {
          return "click " + a.ref;
        } else if constexpr (std::is_same_v<T, action::Type>) {
          return "type " + a.ref + " " + a.text;
        } else if constexpr (std::is_same_v<T, action::PressEnter>) {
          return "press_enter";
        } else if constexpr (std::is_same_v<T, action::Scroll>) {
          return a.direction == ScrollDirection::Up ? "scroll up" : "scroll down";
        } else if constexpr (std::is_same_v<T, action::ReadText>) {
          return "read_text " + a.ref;
        } else {
          return "stop";
        }
      },
      command);
}

std::optional<ActionCommand> parse_action(std::string_view line) {
  std::string_view rest = line;
  auto verb = text::to_lower(next_token(rest));
  if (verb == "navigate") {
    auto url = next_token(rest);
    if (url.empty()) return std::nullopt;
    return action::Navigate{std::string(url)};
  }
  if (verb == "click" || verb == "read_text") {
    auto ref = next_token(rest);
    if (ref.empty()) return std::nullopt;
    if (verb == "click") return action::Click{std::string(ref)};
    return action::ReadText{std::string(ref)};
  }
  if (verb == "type") {
    auto ref = next_token(rest);
    if (ref.empty()) return std::nullopt;
    // Everything after the single separating space is the literal text.
    std::string_view typed = rest.empty() ? rest : rest.substr(1);
    return action::Type{std::string(ref), std::string(typed)};
  }
  if (verb == "press_enter") return action::PressEnter{};
  if (verb == "scroll") {
    auto dir = text::to_lower(next_token(rest));
    if (dir == "up") return action::Scroll{ScrollDirection::Up};
    if (dir == "down" || dir.empty()) return action::Scroll{ScrollDirection::Down};
    return std::nullopt;
  }
  if (verb == "stop") return action::Stop{};
  return std::nullopt;
}

std::vector<std::string> validate_trajectory(const Trajectory& t) {
  std::vector<std::string> out;
  if (t.task_id.empty()) out.emplace_back("task_id: must be non-empty");

  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    if (t.steps[i].index != static_cast<int>(i)) {
      out.emplace_back("steps: non-contiguous indices");
      break;
    }
  }
  for (const auto& step : t.steps) {
    if (!text::is_valid_utf8(step.observation_after.distilled_dom)) {
      out.push_back("steps: distilled_dom of step " + std::to_string(step.index) +
                    " is not valid UTF-8");
    }
    if (step.observation_after.screenshot &&
        step.observation_after.screenshot->step_index != step.index) {
      out.push_back("steps: screenshot linkage of step " + std::to_string(step.index) +
                    " points at step " +
                    std::to_string(step.observation_after.screenshot->step_index));
    }
    for (const auto& outcome : step.actions) {
      for (auto& v : validate_action(outcome.command)) out.push_back("steps: " + v);
    }
  }

  bool unsorted = false;
  for (std::size_t i = 0; i < t.screenshots.size(); ++i) {
    const auto& shot = t.screenshots[i];
    if (!unsorted && i > 0 && shot.step_index < t.screenshots[i - 1].step_index) {
      out.emplace_back("screenshots: not sorted by step_index");
      unsorted = true;
    }
    if (shot.captured && shot.image.empty()) {
      out.push_back("screenshots: captured record for step " + std::to_string(shot.step_index) +
                    " has an empty image");
    }
    if (shot.attempts_used < 1) {
      out.push_back("screenshots: attempts_used must be positive for step " +
                    std::to_string(shot.step_index));
    }
  }

  bool done = t.termination == Termination::AgentDeclaredDone;
  if (done && !t.final_response) {
    out.emplace_back("final_response: required when termination is agent_declared_done");
  } else if (!done && t.final_response) {
    out.emplace_back("final_response: must be absent unless termination is agent_declared_done");
  }

  for (std::size_t i = 0; i < t.planner_log.size(); ++i) {
    auto role = t.planner_log[i].role;
    if (role != ChatRole::Planner && role != ChatRole::UserProxy && role != ChatRole::Verifier) {
      out.push_back("planner_log: role " + std::string(to_string(role)) +
                    " does not belong to the planner chat");
    }
    if (i > 0 && t.planner_log[i - 1].role == role) {
      out.push_back("planner_log: consecutive entries from " + std::string(to_string(role)) +
                    " at position " + std::to_string(i));
    }
  }
  return out;
}

std::string utc_now_iso8601() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace webrefine
