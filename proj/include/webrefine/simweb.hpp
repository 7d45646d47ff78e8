#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "webrefine/core_model.hpp"
#include "webrefine/dom_distill.hpp"
#include "webrefine/webmdp.hpp"

namespace webrefine::simweb {

/// Boolean expression over the simulated page and form state.
struct Condition {
  enum class Op { Always, Page, FormEquals, FormContains, WidgetEquals, All, Any, Not };

  Op op = Op::Always;
  /// Page id for Page; element id for Form*/Widget*.
  std::string subject;
  std::string value;
  std::vector<Condition> children;

  bool operator==(const Condition&) const = default;
};

struct Transition {
  std::string target;
  std::optional<Condition> when;

  bool operator==(const Transition&) const = default;
};

struct ElementSpec {
  std::string id;
  ElementKind kind = ElementKind::Link;
  std::string label;
  /// Evaluated in order on click (links, buttons, widgets) or on enter
  /// (focused textbox); the first whose condition holds moves the page.
  std::vector<Transition> transitions;
  /// Widget states, cycled by clicks; the first entry is the initial state.
  std::vector<std::string> states;

  bool operator==(const ElementSpec&) const = default;
};

struct PageSpec {
  std::string id;
  std::string title;
  std::vector<std::string> text;
  std::vector<ElementSpec> elements;
  bool initial = false;
  /// Size of the generated inline-script filler for this page.
  std::size_t noise_bytes = 0;

  const ElementSpec* find(std::string_view element_id) const;
  bool operator==(const PageSpec&) const = default;
};

struct ScreenshotFailure {
  /// Negative means every step.
  int step_index = 0;
  int failing_attempts = 0;

  bool operator==(const ScreenshotFailure&) const = default;
};

struct SiteScript {
  std::string site_name;
  std::string base_url;
  std::map<std::string, PageSpec> pages;
  Condition success_predicate;
  std::vector<ScreenshotFailure> screenshot_failure_plan;
  /// Throw EnvironmentError when the episode reaches this step count.
  std::optional<int> environment_error_at_step;

  const PageSpec& initial_page() const;
  const PageSpec& page(const std::string& id) const;
  std::string page_url(const std::string& page_id) const;
  std::size_t element_count() const;

  bool operator==(const SiteScript&) const = default;
};

struct SimState {
  std::string current_page;
  std::map<std::string, std::string> form_state;
  std::map<std::string, std::string> widget_state;
  std::string focused;
  int step_count = 0;

  bool operator==(const SimState&) const = default;
};

/// Parses and invariant-checks a script. Throws ScriptSyntaxError (with
/// 1-based line/column) or ScriptSemanticError naming the bad reference.
SiteScript load_site(std::string_view script_text);
SiteScript load_site_file(const std::filesystem::path& path);

/// Loads every *.json script in a directory, keyed by site_name.
std::map<std::string, std::shared_ptr<const SiteScript>> load_site_directory(
    const std::filesystem::path& dir);

SimState initial_state(const SiteScript& script);

bool evaluate(const Condition& condition, const SimState& state, const SiteScript& script);

/// Widget state as seen by predicates and rendering (initial state if never clicked).
std::string widget_value(const SimState& state, const ElementSpec& widget);

/// Deterministic HTML for the current page, including boilerplate noise.
std::string render_dom(const SimState& state, const SiteScript& script);

/// Deterministic PNG of the page; consumes attempts per the failure plan.
ScreenshotRecord capture_screenshot(const SimState& state, const SiteScript& script,
                                    int step_index, int max_attempts);

/// WebEnvironment over a SiteScript. Reward is 1.0 on the step that ends the
/// episode in a state satisfying the success predicate, 0 otherwise. The
/// episode ends on Stop or as soon as the predicate holds.
class SimWebEnvironment : public WebEnvironment {
 public:
  explicit SimWebEnvironment(std::shared_ptr<const SiteScript> script);

  Observation reset(const Task& task) override;
  StepResult step(const ActionCommand& action) override;
  bool done() const override { return done_; }
  ScreenshotRecord capture_screenshot(int step_index, int max_attempts) override;
  std::optional<bool> ground_truth_success() const override;

  const SimState& state() const { return state_; }
  const SiteScript& script() const { return *script_; }

 private:
  Observation observe(std::string feedback) const;
  std::string apply(const ActionCommand& action);
  void follow(const ElementSpec& element);

  std::shared_ptr<const SiteScript> script_;
  SimState state_;
  bool done_ = false;
};

/// Maps each task to a fresh SimWebEnvironment for the script whose
/// site_name equals task.site. Throws ConfigError for unknown sites.
EnvironmentFactory environment_factory(
    std::map<std::string, std::shared_ptr<const SiteScript>> scripts);

}  // namespace webrefine::simweb
