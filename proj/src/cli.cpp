#include "webrefine/cli.hpp"

#include <algorithm>
#include <iterator>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "webrefine/archive.hpp"
#include "webrefine/errors.hpp"
#include "webrefine/eval_harness.hpp"
#include "webrefine/simweb.hpp"

namespace webrefine {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Reads TOML (CLI11's own reader) or, when the file starts with '{', JSON.
/// Nested JSON objects play the role of TOML sections.
class JsonOrTomlConfig : public CLI::ConfigBase {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::string text((std::istreambuf_iterator<char>(input)), std::istreambuf_iterator<char>());
    auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || text[first] != '{') {
      std::istringstream toml(text);
      return CLI::ConfigBase::from_config(toml);
    }
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ConfigError("config file is not a JSON object");
    std::vector<CLI::ConfigItem> items;
    flatten(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v, const std::string& key) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw ConfigError("config key '" + key + "' has an unsupported value");
  }

  static void flatten(const json& obj, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
    for (const auto& [key, value] : obj.items()) {
      if (value.is_object()) {
        auto p = parents;
        p.push_back(key);
        flatten(value, p, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v, key));
      } else {
        item.inputs.push_back(scalar(value, key));
      }
      out.push_back(std::move(item));
    }
  }
};

/// Placeholder for a real-browser driver: every reset fails, so runs against
/// it surface as per-task environment errors.
class RemoteStubEnvironment : public WebEnvironment {
 public:
  Observation reset(const Task& task) override {
    throw EnvironmentError("remote-stub: no browser driver is attached (task " + task.id + ")");
  }
  StepResult step(const ActionCommand&) override { throw EnvironmentError("remote-stub: no browser driver"); }
  bool done() const override { return true; }
  ScreenshotRecord capture_screenshot(int step_index, int) override { return {step_index, {}, 1, false}; }
};

EnvironmentFactory make_environment_factory(const std::string& spec) {
  if (spec == "remote-stub") {
    return [](const Task&) { return std::make_unique<RemoteStubEnvironment>(); };
  }
  if (spec.rfind("simweb:", 0) == 0) {
    fs::path dir = spec.substr(7);
    if (!fs::is_directory(dir)) throw ConfigError("--env: not a directory: " + dir.string());
    return simweb::environment_factory(simweb::load_site_directory(dir));
  }
  throw ConfigError("--env must be simweb:<dir> or remote-stub, got '" + spec + "'");
}

struct BackendOptions {
  std::string spec;
  std::string api_base;
};

/// `scripted:<file>` gives every task fresh ScriptedBackends built from
/// {"default": {role: script}, "tasks": {task_id: {role: script}}}; roles are
/// planner, browser and validator. `remote` shares one RemoteBackend per task.
BackendFactory make_backend_factory(const BackendOptions& opt) {
  if (opt.spec == "remote") {
    if (opt.api_base.empty()) throw ConfigError("--backend remote needs --api-base");
    llm::RemoteConfig rc;
    rc.api_base = opt.api_base;
    return [rc](const Task&) {
      auto b = std::make_shared<llm::RemoteBackend>(rc);
      return TaskBackends{{b, b}, b};
    };
  }
  if (opt.spec.rfind("scripted:", 0) == 0) {
    fs::path file = opt.spec.substr(9);
    if (!fs::is_regular_file(file)) throw ConfigError("--backend: no such file: " + file.string());
    json doc = read_json_file(file);
    if (!doc.is_object()) throw ConfigError("--backend: script file must hold a JSON object");
    for (const auto& [key, _] : doc.items()) {
      if (key != "default" && key != "tasks") throw ConfigError("--backend: unknown key '" + key + "'");
    }
    auto shared = std::make_shared<const json>(std::move(doc));
    return [shared](const Task& task) {
      auto role = [&](const char* name) -> std::shared_ptr<llm::Backend> {
        const json& d = *shared;
        if (d.contains("tasks") && d["tasks"].contains(task.id) && d["tasks"][task.id].contains(name)) {
          return llm::ScriptedBackend::from_json(d["tasks"][task.id][name]);
        }
        if (d.contains("default") && d["default"].contains(name)) {
          return llm::ScriptedBackend::from_json(d["default"][name]);
        }
        return nullptr;
      };
      TaskBackends b{{role("planner"), role("browser")}, role("validator")};
      if (!b.agent.planner || !b.agent.browser) {
        throw ConfigError("backend script has no planner/browser script for task " + task.id);
      }
      return b;
    };
  }
  throw ConfigError("--backend must be scripted:<file> or remote, got '" + opt.spec + "'");
}

struct AgentOptions {
  std::string model;
  std::string timestamp;
  int max_planner_steps = 10;
  int max_actions = 8;
};

AgentConfig make_agent_config(const AgentOptions& opt) {
  auto cfg = AgentConfig::with_default_prompts();
  if (!opt.model.empty()) cfg.planner_model = cfg.browser_model = opt.model;
  if (!opt.timestamp.empty()) cfg.clock = [ts = opt.timestamp] { return ts; };
  cfg.max_planner_steps = opt.max_planner_steps;
  cfg.max_actions_per_step = opt.max_actions;
  return cfg;
}

struct ValidatorOptions {
  std::string modality = "task-log";
  bool vqa = false;
  int max_screenshots = 8;
};

ValidatorConfig make_validator_config(const ValidatorOptions& opt, const std::string& model) {
  ValidatorConfig cfg;
  cfg.modality = *parse_modality(opt.modality);
  cfg.vqa_variant = opt.vqa;
  cfg.max_screenshots = opt.max_screenshots;
  if (!model.empty()) cfg.backend_model_id = model;
  cfg.validate();
  return cfg;
}

std::set<ReportFormat> make_formats(const std::vector<std::string>& names) {
  std::set<ReportFormat> out;
  for (const auto& n : names) out.insert(*parse_report_format(n));
  if (out.empty()) out.insert(ReportFormat::Markdown);
  return out;
}

/// Audit records sorted by task so the file does not depend on scheduling.
void write_audit(const fs::path& path, const AuditLog& audit) {
  auto recs = audit.records();
  std::stable_sort(recs.begin(), recs.end(), [](const auto& a, const auto& b) { return a.task_id < b.task_id; });
  std::string text;
  for (const auto& r : recs) text += audit_record_json(r).dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
  write_text_file(path, text);
}

std::string short_modality(Modality m) {
  switch (m) {
    case Modality::TaskLogText:
      return "Text";
    case Modality::ScreenshotsVision:
      return "Vision";
    case Modality::ScreenshotsPlusFinalResponse:
      return "Vision + Final Text Response";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Subcommands

struct SuiteOptions {
  std::string suite;
  std::string subset = "all";
  std::string env;
  BackendOptions backend;
  AgentOptions agent;
  int parallelism = 1;
  std::string out;
};

int cmd_run(const SuiteOptions& opt, std::ostream& out) {
  auto tasks = load_tasks(opt.suite, *parse_subset(opt.subset));
  auto make_env = make_environment_factory(opt.env);
  auto make_backends = make_backend_factory(opt.backend);

  SuiteConfig cfg;
  cfg.mode = RunMode::RunOnly;
  cfg.parallelism = opt.parallelism;
  cfg.agent = make_agent_config(opt.agent);
  cfg.out_dir = fs::path(opt.out);
  auto result = run_suite(tasks, make_env, make_backends, cfg);

  if (auto labels = result.oracle_labels(); !labels.empty()) {
    write_text_file(fs::path(opt.out) / "oracle_labels.csv", labels_csv(labels));
  }
  out << "ran " << tasks.size() << " task(s), " << result.errored << " errored; archives in " << opt.out << "\n";
  return result.errored ? kExitTaskErrors : kExitOk;
}

struct RefineOptions {
  SuiteOptions suite;
  ValidatorOptions validator;
  int max_attempts = 2;
};

int cmd_refine(const RefineOptions& opt, std::ostream& out) {
  auto vcfg = make_validator_config(opt.validator, opt.suite.agent.model);
  auto tasks = load_tasks(opt.suite.suite, *parse_subset(opt.suite.subset));
  auto make_env = make_environment_factory(opt.suite.env);
  auto make_backends = make_backend_factory(opt.suite.backend);

  AuditLog audit;
  SuiteConfig cfg;
  cfg.mode = opt.max_attempts > 1 ? RunMode::Refine : RunMode::NoRefine;
  cfg.parallelism = opt.suite.parallelism;
  cfg.agent = make_agent_config(opt.suite.agent);
  cfg.refine.max_attempts = opt.max_attempts;
  cfg.refine.validator = vcfg;
  cfg.out_dir = fs::path(opt.suite.out);
  cfg.audit = &audit;
  auto result = run_suite(tasks, make_env, make_backends, cfg);

  fs::path dir = opt.suite.out;
  write_audit(dir / "audit.jsonl", audit);
  if (auto labels = result.oracle_labels(); !labels.empty()) {
    write_text_file(dir / "oracle_labels.csv", labels_csv(labels));
  }

  std::vector<VerdictRecord> verdicts;
  std::size_t refined = 0;
  for (const auto& o : result.outcomes) {
    VerdictRecord r{o.task.id, o.task.site, vcfg.modality, o.outcome.final_verdict,
                    o.outcome.excluded_from_vision_metrics && uses_screenshots(vcfg.modality), o.outcome.error};
    if (!o.outcome.attempts.empty()) r.modality = o.outcome.attempts.back().modality_used;
    if (r.excluded) r.modality = vcfg.modality;
    verdicts.push_back(std::move(r));
    if (o.outcome.refined) ++refined;
  }
  write_text_file(dir / "verdicts.jsonl", verdict_records_jsonl(verdicts));

  std::string method = opt.max_attempts > 1 ? "Self-Refine (" + short_modality(vcfg.modality) + ")" : "No refinement";
  json summary{{"method", method},
               {"modality", to_string(vcfg.modality)},
               {"max_attempts", opt.max_attempts},
               {"tasks", tasks.size()},
               {"refined", refined},
               {"errored", result.errored}};
  if (!tasks.empty()) {
    auto rep = result.ground_truth_success();
    summary["successes"] = rep.overall.successes;
    summary["success_rate"] = rep.overall.pct().str();
    out << method << ": " << rep.overall.successes << "/" << rep.overall.total << " succeeded ("
        << rep.overall.pct().str() << "), " << refined << " refined, " << result.errored << " errored\n";
  } else {
    out << method << ": no tasks\n";
  }
  write_text_file(dir / "summary.json", to_stable_text(summary));
  return result.errored ? kExitTaskErrors : kExitOk;
}

struct ValidateOptions {
  std::string archives;
  ValidatorOptions validator;
  BackendOptions backend;
  std::string model;
  std::string out;
};

int cmd_validate(const ValidateOptions& opt, std::ostream& out) {
  auto vcfg = make_validator_config(opt.validator, opt.model);
  auto make_backends = make_backend_factory(opt.backend);

  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(opt.archives)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());

  AuditLog audit;
  std::vector<VerdictRecord> records;
  std::size_t errors = 0, excluded = 0;
  for (const auto& d : dirs) {
    Task task;
    Trajectory trajectory;
    if (fs::exists(d / "outcome.json")) {
      auto arch = read_outcome_archive(d);
      const auto* t = arch.outcome.last_trajectory();
      if (!t) continue;
      task = arch.task;
      trajectory = *t;
    } else if (fs::exists(d / "trajectory.json")) {
      auto arch = read_trajectory_archive(d);
      task = std::move(arch.task);
      trajectory = std::move(arch.trajectory);
    } else {
      continue;
    }

    VerdictRecord rec{task.id, task.site, vcfg.modality, std::nullopt, false, std::nullopt};
    try {
      auto backends = make_backends(task);
      if (!backends.validator) throw ConfigError("backend script has no validator script for task " + task.id);
      rec.verdict = validate(vcfg, *backends.validator, task, trajectory, &audit);
    } catch (const ScreenshotlessTrajectory& e) {
      rec.excluded = true;
      rec.error = e.what();
    } catch (const MissingFinalResponse& e) {
      rec.excluded = true;
      rec.error = e.what();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      rec.error = e.what();
      spdlog::error("task {}: {}", task.id, e.what());
    }
    if (rec.excluded) ++excluded;
    if (rec.error && !rec.excluded) ++errors;
    records.push_back(std::move(rec));
  }

  fs::path dir = opt.out;
  write_text_file(dir / "verdicts.jsonl", verdict_records_jsonl(records));
  write_audit(dir / "audit.jsonl", audit);
  out << "validated " << records.size() - excluded - errors << " archive(s) with " << to_string(vcfg.modality)
      << ", " << excluded << " excluded, " << errors << " errored\n";
  return errors ? kExitTaskErrors : kExitOk;
}

struct EvalOptions {
  std::vector<std::string> verdicts;
  std::string labels;
  std::vector<std::string> outcomes;
  std::vector<std::string> formats;
  std::string out;
};

void add_site_row(SiteTable& table, const std::string& name, const std::map<std::string, Percent>& cells,
                  const Percent& overall) {
  for (const auto& [site, _] : cells) {
    if (std::find(table.sites.begin(), table.sites.end(), site) == table.sites.end()) table.sites.push_back(site);
  }
  std::sort(table.sites.begin(), table.sites.end());
  table.rows.push_back({name, cells});
  table.overall[name] = overall;
}

int cmd_eval(const EvalOptions& opt, std::ostream& out) {
  auto human = ingest_human_labels(opt.labels);
  if (human.empty()) throw InputFileError("label file " + opt.labels + " has no labels", 0);

  ReportTables tables;
  for (const auto& file : opt.verdicts) {
    auto records = parse_verdict_records(read_text_file(file));
    if (records.empty()) {
      tables.notes.push_back(file + ": no verdicts");
      continue;
    }
    auto modality = records.front().modality;
    std::string name(modality_display_name(modality));
    auto excluded = std::count_if(records.begin(), records.end(), [](const auto& r) { return r.excluded; });
    auto joined = join_labels(validator_labels(records), human);
    if (joined.records.empty()) {
      tables.notes.push_back(name + ": no labelled records");
      continue;
    }
    auto m = confusion_matrix(joined.records);
    tables.confusion.push_back(confusion_row(name, m));
    std::map<std::string, Percent> cells;
    for (const auto& [site, acc] : per_site_accuracy(joined.records)) cells[site] = acc.pct();
    add_site_row(tables.validator_by_site, name, cells, m.accuracy_pct());
    tables.notes.push_back(name + ": " + std::to_string(joined.records.size()) + " labelled, " +
                           std::to_string(joined.unlabeled) + " unlabeled, " + std::to_string(excluded) +
                           " excluded for lack of screenshots");
  }

  for (const auto& d : opt.outcomes) {
    fs::path dir = d;
    std::string name = dir.filename().string();
    if (fs::exists(dir / "summary.json")) name = read_json_file(dir / "summary.json").value("method", name);
    std::vector<fs::path> task_dirs;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_directory() && fs::exists(e.path() / "outcome.json")) task_dirs.push_back(e.path());
    }
    std::sort(task_dirs.begin(), task_dirs.end());
    std::vector<std::pair<Task, Label>> pairs;
    std::size_t unlabeled = 0;
    for (const auto& td : task_dirs) {
      auto arch = read_outcome_archive(td);
      auto truth = arch.outcome.final_oracle_label();
      if (!truth) {
        if (auto it = human.find(arch.task.id); it != human.end()) truth = it->second;
      }
      if (!truth) {
        ++unlabeled;
        continue;
      }
      pairs.emplace_back(arch.task, *truth);
    }
    if (pairs.empty()) {
      tables.notes.push_back(name + ": no labelled outcomes");
      continue;
    }
    auto rep = success_rate(pairs);
    tables.success.push_back({name, rep.overall.pct()});
    std::map<std::string, Percent> cells;
    for (const auto& [site, s] : rep.per_site) cells[site] = s.pct();
    add_site_row(tables.success_by_site, name, cells, rep.overall.pct());
    if (unlabeled) tables.notes.push_back(name + ": " + std::to_string(unlabeled) + " outcome(s) without a label");
  }

  for (const auto& p : emit_report(tables, make_formats(opt.formats), opt.out)) out << "wrote " << p.string() << "\n";
  return kExitOk;
}

struct ReportOptions {
  std::string reported;
  std::vector<std::string> formats;
  std::string out;
  double tolerance = 0.05;
};

int cmd_report(const ReportOptions& opt, std::ostream& out) {
  auto tables = load_reported_tables(opt.reported);
  char buf[160];
  for (const auto& r : tables.confusion) {
    auto c = accuracy_identity_check(
        {r.cells[0].value(), r.cells[1].value(), r.cells[2].value(), r.cells[3].value()}, r.accuracy.value(),
        opt.tolerance);
    std::snprintf(buf, sizeof buf, "tp+tn=%.2f accuracy=%s cells=%.2f", c.tp_plus_tn, r.accuracy.number().c_str(),
                  c.cell_sum);
    out << r.name << ": " << buf << (c.ok ? " ok" : " MISMATCH") << (c.flagged ? " flagged" : "") << "\n";
    if (c.flagged) {
      std::snprintf(buf, sizeof buf, "%s: cells sum to %.2f%%, not 100%%", r.name.c_str(), c.cell_sum);
      tables.notes.emplace_back(buf);
    }
  }
  for (const auto& p : emit_report(tables, make_formats(opt.formats), opt.out)) out << "wrote " << p.string() << "\n";
  return kExitOk;
}

void ensure_logger() {
  if (!spdlog::get("webrefine")) {
    spdlog::set_default_logger(spdlog::stderr_logger_mt("webrefine"));
  }
}

const std::vector<std::string> kModalities{"task-log", "screenshots", "multimodal"};
const std::vector<std::string> kFormats{"markdown", "csv", "html"};

void add_suite_options(CLI::App* cmd, SuiteOptions& o) {
  cmd->add_option("--suite", o.suite, "Task suite JSONL")->required()->check(CLI::ExistingFile);
  cmd->add_option("--subset", o.subset, "Task subset")
      ->check(CLI::IsMember({"all", "even-ids"}))
      ->capture_default_str();
  cmd->add_option("--env", o.env, "Environment: simweb:<script-dir> or remote-stub")->required();
  cmd->add_option("--backend", o.backend.spec, "Model backend: scripted:<file> or remote")->required();
  cmd->add_option("--api-base", o.backend.api_base, "Base URL of the chat-completions API (remote backend)");
  cmd->add_option("--model", o.agent.model, "Model id for every agent and the validator");
  cmd->add_option("--parallelism", o.parallelism, "Concurrent tasks")
      ->check(CLI::Range(1, 256))
      ->capture_default_str();
  cmd->add_option("--max-planner-steps", o.agent.max_planner_steps, "Planner step budget per attempt")
      ->check(CLI::Range(1, 1000))
      ->capture_default_str();
  cmd->add_option("--max-actions", o.agent.max_actions, "Browser action budget per planner step")
      ->check(CLI::Range(1, 1000))
      ->capture_default_str();
  cmd->add_option("--timestamp", o.agent.timestamp, "Fixed recorded_at value for reproducible archives");
  cmd->add_option("--out", o.out, "Output directory")->required();
}

void add_validator_options(CLI::App* cmd, ValidatorOptions& o) {
  cmd->add_option("--modality", o.modality, "Validator evidence")
      ->check(CLI::IsMember(kModalities))
      ->capture_default_str();
  cmd->add_flag("--vqa", o.vqa, "Use the visual-question close prompt (vision modalities)");
  cmd->add_option("--max-screenshots", o.max_screenshots, "Screenshots shown to the validator")
      ->check(CLI::Range(1, 100))
      ->capture_default_str();
}

void add_format_option(CLI::App* cmd, std::vector<std::string>& formats) {
  cmd->add_option("--format", formats, "Report formats (markdown, csv, html); default markdown")
      ->delimiter(',')
      ->check(CLI::IsMember(kFormats));
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Self-refining web-navigation agent: run, validate, refine and evaluate.", "webrefine"};
  app.config_formatter(std::make_shared<JsonOrTomlConfig>());
  app.set_config("--config", "", "TOML or JSON file; [section] per subcommand, flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.fallthrough();
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}))
      ->capture_default_str();

  SuiteOptions run_opt;
  auto* run = app.add_subcommand("run", "Run the agent over a suite without validation");
  add_suite_options(run, run_opt);

  RefineOptions refine_opt;
  auto* refine = app.add_subcommand("refine", "Run, validate and reattempt with validator feedback");
  add_suite_options(refine, refine_opt.suite);
  add_validator_options(refine, refine_opt.validator);
  refine->add_option("--max-attempts", refine_opt.max_attempts, "Attempts per task including the first")
      ->check(CLI::Range(1, 100))
      ->capture_default_str();

  ValidateOptions validate_opt;
  auto* validate_cmd = app.add_subcommand("validate", "Validate archived trajectories");
  validate_cmd->add_option("--archives", validate_opt.archives, "Directory of run or refine archives")
      ->required()
      ->check(CLI::ExistingDirectory);
  add_validator_options(validate_cmd, validate_opt.validator);
  validate_cmd->add_option("--backend", validate_opt.backend.spec, "Model backend: scripted:<file> or remote")
      ->required();
  validate_cmd->add_option("--api-base", validate_opt.backend.api_base, "Base URL of the chat-completions API");
  validate_cmd->add_option("--model", validate_opt.model, "Validator model id");
  validate_cmd->add_option("--out", validate_opt.out, "Output directory")->required();

  EvalOptions eval_opt;
  auto* eval = app.add_subcommand("eval", "Score verdicts against labels and render reports");
  eval->add_option("--verdicts", eval_opt.verdicts, "verdicts.jsonl from validate or refine (repeatable)")
      ->check(CLI::ExistingFile);
  eval->add_option("--labels", eval_opt.labels, "Human labels CSV (task_id,label)")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--outcomes", eval_opt.outcomes, "Refine output directory (repeatable)")
      ->check(CLI::ExistingDirectory);
  add_format_option(eval, eval_opt.formats);
  eval->add_option("--out", eval_opt.out, "Report directory")->required();

  ReportOptions report_opt;
  auto* report = app.add_subcommand("report", "Render and cross-check reported percentage tables");
  report->add_option("--reported", report_opt.reported, "Directory with table1.csv .. table4.csv")
      ->required()
      ->check(CLI::ExistingDirectory);
  report->add_option("--tolerance", report_opt.tolerance, "Identity-check tolerance in percentage points")
      ->check(CLI::Range(0.0, 100.0))
      ->capture_default_str();
  add_format_option(report, report_opt.formats);
  report->add_option("--out", report_opt.out, "Report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  ensure_logger();
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*run) return cmd_run(run_opt, out);
    if (*refine) return cmd_refine(refine_opt, out);
    if (*validate_cmd) return cmd_validate(validate_opt, out);
    if (*eval) return cmd_eval(eval_opt, out);
    if (*report) return cmd_report(report_opt, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InputFileError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ScriptSyntaxError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ScriptSemanticError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitTaskErrors;
  }
  return kExitUsage;
}

}  // namespace webrefine
