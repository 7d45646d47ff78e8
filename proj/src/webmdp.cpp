#include "webrefine/webmdp.hpp"

#include <stdexcept>

#include "webrefine/errors.hpp"

namespace webrefine {

void MdpConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw ConfigError("gamma must lie in [0, 1), got " + std::to_string(gamma));
  }
  if (step_budget < 1) {
    throw ConfigError("step_budget must be >= 1, got " + std::to_string(step_budget));
  }
}

double discounted_return(std::span<const double> rewards, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::domain_error("discount must lie in [0, 1)");
  }
  // Horner form: r0 + g*(r1 + g*(r2 + ...)).
  double total = 0.0;
  for (auto it = rewards.rbegin(); it != rewards.rend(); ++it) total = *it + gamma * total;
  return total;
}

std::vector<double> RolloutResult::rewards() const {
  std::vector<double> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.reward);
  return out;
}

RolloutResult rollout(WebEnvironment& env, const Observation& start, const Policy& policy,
                      const MdpConfig& cfg) {
  cfg.validate();
  RolloutResult result;
  Observation current = start;
  for (int t = 0; t < cfg.step_budget; ++t) {
    ActionCommand action = policy(current);
    StepResult step;
    try {
      step = env.step(action);
    } catch (const EnvironmentError& e) {
      result.environment_error = e.what();
      return result;
    }
    result.steps.push_back({std::move(action), step.reward});
    result.observations.push_back(step.observation);
    current = std::move(step.observation);
    if (step.done) {
      result.done = true;
      break;
    }
  }
  return result;
}

}  // namespace webrefine
