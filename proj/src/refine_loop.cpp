#include "webrefine/refine_loop.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "webrefine/archive.hpp"
#include "webrefine/errors.hpp"

namespace webrefine {

namespace fs = std::filesystem;
using nlohmann::json;

void RefineConfig::validate() const {
  if (max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
  validator.validate();
}

std::optional<Label> RefinedOutcome::final_oracle_label() const {
  const auto* t = last_trajectory();
  return t ? t->oracle_label : std::nullopt;
}

const Trajectory* RefinedOutcome::last_trajectory() const {
  if (unvalidated) return &*unvalidated;
  if (!attempts.empty()) return &attempts.back().trajectory;
  return nullptr;
}

RefinedOutcome run_with_refinement(const AgentBackends& agent, llm::Backend& validator_backend, const Task& task,
                                   const EnvironmentFactory& make_env, const AgentConfig& agent_cfg,
                                   const RefineConfig& refine_cfg, AuditLog* audit) {
  refine_cfg.validate();
  RefinedOutcome out;
  out.task_id = task.id;

  std::optional<std::string> feedback;
  for (int attempt = 1; attempt <= refine_cfg.max_attempts; ++attempt) {
    Trajectory t;
    try {
      auto env = make_env(task);
      t = run_task(agent, task, *env, agent_cfg, feedback);
    } catch (const Error& e) {
      out.error = std::string("attempt ") + std::to_string(attempt) + ": agent failed: " + e.what();
      spdlog::error("task {}: {}", task.id, *out.error);
      break;
    }
    if (t.termination == Termination::EnvironmentError) {
      std::string detail = "environment error";
      if (!t.steps.empty() && t.steps.back().error) detail += ": " + *t.steps.back().error;
      out.error = "attempt " + std::to_string(attempt) + ": " + detail;
      out.unvalidated = std::move(t);
      spdlog::error("task {}: {}", task.id, *out.error);
      break;
    }

    ValidatorConfig vcfg = refine_cfg.validator;
    if (uses_screenshots(vcfg.modality)) {
      bool any = std::any_of(t.screenshots.begin(), t.screenshots.end(), [](const auto& s) { return s.captured; });
      if (!any) {
        spdlog::warn("task {}: attempt {} has no screenshots; validating from the task log", task.id, attempt);
        vcfg.modality = Modality::TaskLogText;
        vcfg.vqa_variant = false;
        out.excluded_from_vision_metrics = true;
      }
    }

    Verdict verdict;
    try {
      verdict = validate(vcfg, validator_backend, task, t, audit);
    } catch (const Error& e) {
      out.error = std::string("attempt ") + std::to_string(attempt) + ": validator failed: " + e.what();
      out.unvalidated = std::move(t);
      spdlog::error("task {}: {}", task.id, *out.error);
      break;
    }

    feedback = verdict.rationale;
    bool complete = verdict.was_completed;
    out.attempts.push_back({std::move(t), std::move(verdict), vcfg.modality});
    if (complete) break;
  }

  out.attempts_used = static_cast<int>(out.attempts.size());
  out.refined = out.attempts_used > 1;
  if (!out.attempts.empty()) out.final_verdict = out.attempts.back().verdict;
  return out;
}

namespace {

std::string attempt_dir(int k) { return "attempt_" + std::to_string(k); }

}  // namespace

void write_outcome_archive(const fs::path& dir, const Task& task, const RefinedOutcome& outcome) {
  json attempts = json::array();
  for (std::size_t i = 0; i < outcome.attempts.size(); ++i) {
    const auto& a = outcome.attempts[i];
    auto sub = attempt_dir(static_cast<int>(i) + 1);
    write_trajectory_archive(dir / sub, task, a.trajectory);
    attempts.push_back({{"archive", sub}, {"modality_used", to_string(a.modality_used)},
                        {"verdict", verdict_to_json(a.verdict)}});
  }
  json j{{"task_id", outcome.task_id},
         {"attempts", std::move(attempts)},
         {"attempts_used", outcome.attempts_used},
         {"refined", outcome.refined},
         {"excluded_from_vision_metrics", outcome.excluded_from_vision_metrics}};
  j["final_verdict"] = outcome.final_verdict ? verdict_to_json(*outcome.final_verdict) : json(nullptr);
  j["error"] = outcome.error ? json(*outcome.error) : json(nullptr);
  if (outcome.unvalidated) {
    auto sub = attempt_dir(static_cast<int>(outcome.attempts.size()) + 1);
    write_trajectory_archive(dir / sub, task, *outcome.unvalidated);
    j["unvalidated"] = sub;
  } else {
    j["unvalidated"] = nullptr;
  }
  write_text_file(dir / "task.json", to_stable_text(task_to_json(task)));
  write_text_file(dir / "outcome.json", to_stable_text(j));
}

OutcomeArchive read_outcome_archive(const fs::path& dir) {
  auto j = read_json_file(dir / "outcome.json");
  try {
    OutcomeArchive out;
    auto& o = out.outcome;
    o.task_id = j.at("task_id").get<std::string>();
    out.task = task_from_json(read_json_file(dir / "task.json"));
    for (const auto& a : j.at("attempts")) {
      auto arch = read_trajectory_archive(dir / a.at("archive").get<std::string>());
      auto modality = parse_modality(a.at("modality_used").get<std::string>());
      if (!modality) throw ArchiveError("unknown modality in " + (dir / "outcome.json").string());
      o.attempts.push_back({std::move(arch.trajectory), verdict_from_json(a.at("verdict")), *modality});
    }
    o.attempts_used = j.at("attempts_used").get<int>();
    o.refined = j.at("refined").get<bool>();
    o.excluded_from_vision_metrics = j.at("excluded_from_vision_metrics").get<bool>();
    if (!j.at("final_verdict").is_null()) o.final_verdict = verdict_from_json(j.at("final_verdict"));
    if (!j.at("error").is_null()) o.error = j.at("error").get<std::string>();
    if (!j.at("unvalidated").is_null()) {
      auto arch = read_trajectory_archive(dir / j.at("unvalidated").get<std::string>());
      o.unvalidated = std::move(arch.trajectory);
    }
    return out;
  } catch (const json::exception& e) {
    throw ArchiveError("malformed " + (dir / "outcome.json").string() + ": " + e.what());
  }
}

}  // namespace webrefine
