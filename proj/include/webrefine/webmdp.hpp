#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "webrefine/core_model.hpp"

namespace webrefine {

/// Discount and truncation horizon for a web episode.
struct MdpConfig {
  double gamma = 0.9;
  int step_budget = 25;

  /// Throws ConfigError unless 0 <= gamma < 1 and step_budget >= 1.
  void validate() const;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
};

/// A web site seen as an MDP: pages are states, ActionCommands are actions.
///
/// After step() reports done, further step() calls throw EpisodeFinished until
/// reset(). Implementations are single-threaded; create one per worker.
class WebEnvironment {
 public:
  virtual ~WebEnvironment() = default;

  virtual Observation reset(const Task& task) = 0;
  virtual StepResult step(const ActionCommand& action) = 0;
  virtual bool done() const = 0;

  /// Screenshot of the current page. Failure is in-band (captured == false).
  virtual ScreenshotRecord capture_screenshot(int step_index, int max_attempts) = 0;

  /// Ground truth for the current state when the environment knows it
  /// (simulators); nullopt for live sites.
  virtual std::optional<bool> ground_truth_success() const { return std::nullopt; }
};

using EnvironmentFactory = std::function<std::unique_ptr<WebEnvironment>(const Task&)>;

/// Sum over t of gamma^t * rewards[t]. Throws std::domain_error unless 0 <= gamma < 1.
double discounted_return(std::span<const double> rewards, double gamma);

struct RolloutStep {
  ActionCommand action;
  double reward = 0.0;

  bool operator==(const RolloutStep&) const = default;
};

struct RolloutResult {
  std::vector<RolloutStep> steps;
  std::vector<Observation> observations;
  bool done = false;
  /// Set when the environment threw mid-rollout; steps holds the partial rollout.
  std::optional<std::string> environment_error;

  std::vector<double> rewards() const;
};

using Policy = std::function<ActionCommand(const Observation&)>;

/// Drives `policy` against an already reset environment for at most
/// cfg.step_budget steps, stopping early when the episode ends.
RolloutResult rollout(WebEnvironment& env, const Observation& start, const Policy& policy,
                      const MdpConfig& cfg);

}  // namespace webrefine
