#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "webrefine/core_model.hpp"
#include "webrefine/refine_loop.hpp"

namespace webrefine {

// ---------------------------------------------------------------------------
// Ingestion

enum class Subset { All, EvenIds };

std::optional<Subset> parse_subset(std::string_view text);
std::string_view to_string(Subset subset);

/// Trailing run of decimal digits in an id ("Allrecipes--7" -> 7).
std::optional<std::uint64_t> trailing_integer(std::string_view id);

/// One task per non-blank line, either {id, site, instruction, start_url} or
/// the WebVoyager shape {id, web_name, ques, web}. Ids may be strings or
/// integers. Throws InputFileError (with line) on malformed lines and
/// duplicate ids.
std::vector<Task> parse_tasks_jsonl(std::string_view text, Subset subset);
std::vector<Task> load_tasks(const std::filesystem::path& path, Subset subset);

/// CSV with header `task_id,label`, labels complete|incomplete.
std::map<std::string, Label> parse_labels_csv(std::string_view text);
std::map<std::string, Label> ingest_human_labels(const std::filesystem::path& path);
std::string labels_csv(const std::map<std::string, Label>& labels);

// ---------------------------------------------------------------------------
// Metrics

/// A percentage held in hundredths, rendered with `decimals` places.
/// Computed values round half up to two decimals; parsed values keep the
/// precision they were written with ("76.2" stays "76.2%").
struct Percent {
  std::int64_t hundredths = 0;
  int decimals = 2;

  static Percent from_ratio(std::uint64_t num, std::uint64_t den);
  /// Accepts "84.24", "84.24%" or "76.2%"; at most two decimals.
  static Percent parse(std::string_view text);

  double value() const { return static_cast<double>(hundredths) / 100.0; }
  std::string str() const;  // with the % sign
  std::string number() const;

  bool operator==(const Percent&) const = default;
};

struct EvalRecord {
  std::string task_id;
  std::string site;
  Label validator_label = Label::Incomplete;
  Label human_label = Label::Incomplete;

  bool operator==(const EvalRecord&) const = default;
};

struct ConfusionMatrix {
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;

  std::uint64_t n() const { return tp + tn + fp + fn; }
  std::uint64_t correct() const { return tp + tn; }
  /// Fraction in [0, 1].
  double accuracy() const;
  Percent accuracy_pct() const { return Percent::from_ratio(correct(), n()); }
  /// TP, TN, FP, FN as percentages of n.
  std::array<Percent, 4> cell_pcts() const;

  bool operator==(const ConfusionMatrix&) const = default;
};

/// Positive means complete. Throws std::invalid_argument on an empty list.
ConfusionMatrix confusion_matrix(const std::vector<EvalRecord>& records);

struct IdentityCheck {
  double tp_plus_tn = 0.0;
  double cell_sum = 0.0;
  /// Accuracy within tol of TP%+TN% and cells within kCellSumTolerance of 100.
  bool ok = false;
  /// Cells miss 100 by more than 4*tol.
  bool flagged = false;
};

inline constexpr double kCellSumTolerance = 0.25;

/// Cross-checks published confusion-matrix percentages (TP, TN, FP, FN)
/// against a published accuracy.
IdentityCheck accuracy_identity_check(const std::array<double, 4>& pcts, double reported_accuracy, double tol);

struct SiteAccuracy {
  std::uint64_t matches = 0;
  std::uint64_t total = 0;

  double rate() const { return total ? static_cast<double>(matches) / static_cast<double>(total) : 0.0; }
  Percent pct() const { return Percent::from_ratio(matches, total); }
  bool operator==(const SiteAccuracy&) const = default;
};

std::map<std::string, SiteAccuracy> per_site_accuracy(const std::vector<EvalRecord>& records);

struct SiteSuccess {
  std::uint64_t successes = 0;
  std::uint64_t total = 0;

  double rate() const { return total ? static_cast<double>(successes) / static_cast<double>(total) : 0.0; }
  Percent pct() const { return Percent::from_ratio(successes, total); }
  bool operator==(const SiteSuccess&) const = default;
};

struct SuccessReport {
  SiteSuccess overall;
  std::map<std::string, SiteSuccess> per_site;

  double overall_rate() const { return overall.rate(); }
};

/// `outcomes` pairs each task with the ground-truth label of its final
/// attempt. Throws std::invalid_argument on an empty list.
SuccessReport success_rate(const std::vector<std::pair<Task, Label>>& outcomes);

struct JoinResult {
  std::vector<EvalRecord> records;
  /// Tasks missing a validator or a human label.
  std::size_t unlabeled = 0;
  /// Human labels naming tasks that had no validator verdict at all.
  std::vector<std::string> unmatched_human_labels;
};

struct ValidatorLabel {
  std::string task_id;
  std::string site;
  std::optional<Label> label;
};

/// Joins on task_id; records sorted by task_id.
JoinResult join_labels(const std::vector<ValidatorLabel>& validator, const std::map<std::string, Label>& human);

// ---------------------------------------------------------------------------
// Verdict files (validate stage output)

struct VerdictRecord {
  std::string task_id;
  std::string site;
  Modality modality = Modality::TaskLogText;
  std::optional<Verdict> verdict;
  /// Screenshotless trajectory under a vision modality; verdict is absent.
  bool excluded = false;
  std::optional<std::string> error;
};

std::string verdict_records_jsonl(const std::vector<VerdictRecord>& records);
std::vector<VerdictRecord> parse_verdict_records(std::string_view jsonl);

/// Validator labels for a modality, skipping excluded records.
std::vector<ValidatorLabel> validator_labels(const std::vector<VerdictRecord>& records);

// ---------------------------------------------------------------------------
// Reports

/// Display names of the three validators, e.g. "Task Log (text)".
std::string_view modality_display_name(Modality modality);

struct ConfusionRow {
  std::string name;
  std::array<Percent, 4> cells;
  Percent accuracy;
  /// Present when the row was computed rather than transcribed.
  std::optional<ConfusionMatrix> counts;
};

ConfusionRow confusion_row(std::string name, const ConfusionMatrix& m);

/// Rows by columns of percentages; a missing cell renders as "-".
struct SiteTable {
  std::vector<std::string> sites;
  std::vector<std::pair<std::string, std::map<std::string, Percent>>> rows;
  /// Optional trailing "Overall" column.
  std::map<std::string, Percent> overall;
};

struct RateRow {
  std::string name;
  Percent rate;
};

struct ReportTables {
  std::vector<ConfusionRow> confusion;
  SiteTable validator_by_site;
  std::vector<RateRow> success;
  SiteTable success_by_site;
  /// Free-form notes (unlabeled tallies, exclusions) listed under the tables.
  std::vector<std::string> notes;
};

enum class ReportFormat { Markdown, Csv, Html };

std::optional<ReportFormat> parse_report_format(std::string_view text);

std::string render_markdown(const ReportTables& t);
std::string render_csv(const ReportTables& t);
std::string render_html(const ReportTables& t);

/// Writes report.md / metrics.csv / report.html for the requested formats and
/// returns their paths in that order. Throws ArchiveError when out_dir is not writable.
std::vector<std::filesystem::path> emit_report(const ReportTables& t, const std::set<ReportFormat>& formats,
                                               const std::filesystem::path& out_dir);

/// Reported-percentage fixtures. table1.csv: name,tp,tn,fp,fn,accuracy.
/// table3.csv: name,rate. Site tables (table2.csv, table4.csv): name,site,value
/// with site "Overall" feeding the overall column. Missing files are skipped.
ReportTables load_reported_tables(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Suite runner

enum class RunMode { RunOnly, NoRefine, Refine };

struct TaskBackends {
  AgentBackends agent;
  std::shared_ptr<llm::Backend> validator;
};

/// Called once per task, so each worker owns its backends.
using BackendFactory = std::function<TaskBackends(const Task&)>;

struct SuiteConfig {
  RunMode mode = RunMode::Refine;
  int parallelism = 1;
  AgentConfig agent = AgentConfig::with_default_prompts();
  RefineConfig refine;
  /// Archives go to <out_dir>/<task>/ when set.
  std::optional<std::filesystem::path> out_dir;
  AuditLog* audit = nullptr;

  void validate() const;
};

struct TaskOutcome {
  Task task;
  RefinedOutcome outcome;
};

struct SuiteResult {
  /// Same order as the input tasks.
  std::vector<TaskOutcome> outcomes;
  std::size_t errored = 0;

  /// Success judged by the environment's ground truth of the final attempt;
  /// tasks without ground truth count as failures.
  SuccessReport ground_truth_success() const;
  std::map<std::string, Label> oracle_labels() const;
};

SuiteResult run_suite(const std::vector<Task>& tasks, const EnvironmentFactory& make_env,
                      const BackendFactory& make_backends, const SuiteConfig& cfg);

}  // namespace webrefine
