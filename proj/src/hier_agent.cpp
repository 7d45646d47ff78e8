#include "webrefine/hier_agent.hpp"

#include <spdlog/spdlog.h>

#include "webrefine/errors.hpp"
#include "webrefine/prompts.hpp"
#include "webrefine/text.hpp"

namespace webrefine {

namespace {

llm::Message text_message(llm::Role role, std::string content) {
  return llm::Message{role, {llm::TextPart{std::move(content)}}};
}

llm::ChatRequest planner_request(const std::vector<ChatEntry>& log, const AgentConfig& cfg) {
  llm::ChatRequest req;
  req.model_id = cfg.planner_model;
  req.temperature = cfg.temperature;
  req.max_output_tokens = cfg.max_output_tokens;
  req.messages.push_back(text_message(llm::Role::System, cfg.planner_system_prompt));
  for (const auto& e : log) {
    auto role = e.role == ChatRole::Planner ? llm::Role::Assistant : llm::Role::User;
    req.messages.push_back(text_message(role, e.content));
  }
  return req;
}

std::string task_message(const Task& task) {
  return "Task: " + task.instruction + "\nStart URL: " + task.start_url;
}

std::string executor_message(std::string_view result, const Observation& obs) {
  std::string out;
  out += "Result: ";
  out += result;
  out += "\n\nObservation:\n";
  out += obs.distilled_dom;
  return out;
}

}  // namespace

AgentConfig AgentConfig::with_default_prompts() {
  AgentConfig cfg;
  cfg.planner_system_prompt = std::string(prompts::planner_system());
  cfg.browser_system_prompt = std::string(prompts::browser_system());
  return cfg;
}

void AgentConfig::validate() const {
  if (max_planner_steps < 1) throw ConfigError("max_planner_steps must be >= 1");
  if (max_actions_per_step < 1) throw ConfigError("max_actions_per_step must be >= 1");
  if (screenshot_max_attempts < 1) throw ConfigError("screenshot_max_attempts must be >= 1");
  if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
}

PlannerDirective parse_planner_reply(std::string_view reply) {
  auto trimmed = text::trim(reply);
  if (trimmed.empty()) throw PlannerReplyError("planner returned an empty reply");

  if (auto at = trimmed.find(kTerminateSentinel); at != std::string_view::npos) {
    auto after = text::trim(trimmed.substr(at + kTerminateSentinel.size()));
    if (after.empty()) after = text::trim(trimmed.substr(0, at));
    if (after.empty()) throw PlannerReplyError("planner terminated without a final response");
    return Terminate{std::string(after)};
  }
  if (trimmed.find('\n') != std::string_view::npos) {
    spdlog::warn("planner reply spans several lines; using it verbatim as the next step");
  }
  return NextStep{std::string(trimmed)};
}

std::string refinement_feedback_message(std::string_view rationale) {
  return "Previous attempt judged incomplete. Feedback: " + std::string(rationale);
}

PlannerDirective plan_next_step(llm::Backend& planner, const Task& task,
                                std::vector<ChatEntry>& planner_log,
                                const std::optional<std::string>& feedback, const AgentConfig& cfg) {
  if (planner_log.empty()) planner_log.push_back({ChatRole::UserProxy, task_message(task)});
  if (feedback) planner_log.push_back({ChatRole::Verifier, refinement_feedback_message(*feedback)});

  auto resp = llm::complete(planner, planner_request(planner_log, cfg), cfg.retry);
  planner_log.push_back({ChatRole::Planner, resp.text});
  return parse_planner_reply(resp.text);
}

std::optional<std::variant<ActionCommand, BrowserDone>> parse_browser_reply(std::string_view reply) {
  for (auto line : text::split_lines(reply)) {
    line = text::trim(line);
    if (text::starts_with_icase(line, "ACTION:")) {
      if (auto cmd = parse_action(line.substr(7)); cmd && validate_action(*cmd).empty()) return *cmd;
      return std::nullopt;
    }
    if (text::starts_with_icase(line, "DONE:")) {
      return BrowserDone{std::string(text::trim(line.substr(5)))};
    }
  }
  return std::nullopt;
}

DirectiveResult execute_directive(llm::Backend& browser, const NextStep& directive, WebEnvironment& env,
                                  const Observation& current, int step_index, const AgentConfig& cfg) {
  DirectiveResult out;
  StepRecord& step = out.step;
  step.index = step_index;
  step.directive = directive.text;

  Observation obs = current;
  obs.screenshot.reset();

  llm::ChatRequest req;
  req.model_id = cfg.browser_model;
  req.temperature = cfg.temperature;
  req.max_output_tokens = cfg.max_output_tokens;
  req.messages.push_back(text_message(llm::Role::System, cfg.browser_system_prompt));
  std::string opening = "Directive: " + directive.text + "\n\nObservation:\n" + obs.distilled_dom;
  step.sub_log.push_back({ChatRole::Executor, opening});
  req.messages.push_back(text_message(llm::Role::User, std::move(opening)));

  bool declared_done = false;
  for (int turn = 0; turn < cfg.max_actions_per_step; ++turn) {
    if (env.done()) {
      out.episode_done = true;
      break;
    }
    auto resp = llm::complete(browser, req, cfg.retry);
    step.sub_log.push_back({ChatRole::BrowserAgent, resp.text});
    req.messages.push_back(text_message(llm::Role::Assistant, resp.text));

    auto parsed = parse_browser_reply(resp.text);
    if (!parsed) {
      std::string msg = executor_message(
          "could not parse a command; reply with ACTION: <verb> [ref] [text] or DONE: <summary>", obs);
      step.sub_log.push_back({ChatRole::Executor, msg});
      req.messages.push_back(text_message(llm::Role::User, std::move(msg)));
      continue;
    }
    if (const auto* done = std::get_if<BrowserDone>(&*parsed)) {
      out.summary = done->summary.empty() ? "Step finished." : done->summary;
      declared_done = true;
      break;
    }

    const auto& cmd = std::get<ActionCommand>(*parsed);
    StepResult result;
    try {
      result = env.step(cmd);
    } catch (const EnvironmentError& e) {
      step.error = e.what();
      out.summary = std::string("Environment error: ") + e.what();
      break;
    }
    std::string feedback = result.observation.feedback.empty() ? "ok" : result.observation.feedback;
    step.actions.push_back({cmd, feedback});
    obs = std::move(result.observation);
    std::string msg = executor_message(feedback, obs);
    step.sub_log.push_back({ChatRole::Executor, msg});
    req.messages.push_back(text_message(llm::Role::User, std::move(msg)));
    if (result.done) {
      out.episode_done = true;
      break;
    }
  }

  if (out.summary.empty()) {
    if (out.episode_done) {
      out.summary = "The episode ended during this step.";
    } else if (!declared_done) {
      out.summary = "Action budget exhausted before the step was finished.";
    }
  }

  if (cfg.screenshot_every_step && !step.error) {
    obs.screenshot = env.capture_screenshot(step_index, cfg.screenshot_max_attempts);
  }
  step.observation_after = std::move(obs);
  return out;
}

Trajectory run_task(const AgentBackends& backends, const Task& task, WebEnvironment& env,
                    const AgentConfig& cfg, const std::optional<std::string>& feedback) {
  cfg.validate();
  if (!backends.planner || !backends.browser) throw ConfigError("agent backends are not configured");

  Trajectory t;
  t.task_id = task.id;
  t.recorded_at = cfg.clock ? cfg.clock() : utc_now_iso8601();
  t.termination = Termination::StepBudgetExhausted;

  Observation obs;
  try {
    obs = env.reset(task);
  } catch (const EnvironmentError& e) {
    spdlog::error("task {}: environment reset failed: {}", task.id, e.what());
    t.termination = Termination::EnvironmentError;
    return t;
  }

  std::optional<std::string> pending_feedback = feedback;
  for (int i = 0; i < cfg.max_planner_steps; ++i) {
    auto directive = plan_next_step(*backends.planner, task, t.planner_log, pending_feedback, cfg);
    pending_feedback.reset();

    if (auto* term = std::get_if<Terminate>(&directive)) {
      t.final_response = term->final_response;
      t.termination = Termination::AgentDeclaredDone;
      break;
    }
    auto result = execute_directive(*backends.browser, std::get<NextStep>(directive), env, obs,
                                    static_cast<int>(t.steps.size()), cfg);
    if (result.step.observation_after.screenshot) {
      t.screenshots.push_back(*result.step.observation_after.screenshot);
    }
    bool failed = result.step.error.has_value();
    obs = result.step.observation_after;
    t.steps.push_back(std::move(result.step));
    if (failed) {
      t.termination = Termination::EnvironmentError;
      break;
    }
    t.planner_log.push_back({ChatRole::UserProxy, "Step " + std::to_string(t.steps.size()) +
                                                      " result: " + result.summary +
                                                      "\nCurrent page: " + obs.title + " (" + obs.url +
                                                      ")"});
  }

  if (auto truth = env.ground_truth_success()) {
    t.oracle_label = *truth ? Label::Complete : Label::Incomplete;
  }
  return t;
}

}  // namespace webrefine
