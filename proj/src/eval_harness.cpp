#include "webrefine/eval_harness.hpp"

#include <atomic>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <spdlog/spdlog.h>

#include "webrefine/archive.hpp"
#include "webrefine/errors.hpp"
#include "webrefine/text.hpp"

namespace webrefine {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Ingestion

std::optional<Subset> parse_subset(std::string_view text) {
  if (text == "all") return Subset::All;
  if (text == "even-ids") return Subset::EvenIds;
  return std::nullopt;
}

std::string_view to_string(Subset subset) { return subset == Subset::All ? "all" : "even-ids"; }

std::optional<std::uint64_t> trailing_integer(std::string_view id) {
  std::size_t start = id.size();
  while (start > 0 && id[start - 1] >= '0' && id[start - 1] <= '9') --start;
  if (start == id.size()) return std::nullopt;
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(id.data() + start, id.data() + id.size(), value);
  if (ec != std::errc()) return std::nullopt;
  return value;
}

namespace {

std::string id_string(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<std::int64_t>());
  throw std::invalid_argument("id must be a string or an integer");
}

std::string string_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw std::invalid_argument(std::string("missing field '") + key + "'");
  if (!it->is_string()) throw std::invalid_argument(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

Task task_from_line(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("expected a JSON object");
  if (!j.contains("id")) throw std::invalid_argument("missing field 'id'");
  Task t;
  t.id = id_string(j.at("id"));
  if (j.contains("web_name") || j.contains("ques")) {
    t.site = string_field(j, "web_name");
    t.instruction = string_field(j, "ques");
    t.start_url = string_field(j, "web");
  } else {
    t.site = string_field(j, "site");
    t.instruction = string_field(j, "instruction");
    t.start_url = string_field(j, "start_url");
  }
  return t;
}

/// Minimal CSV field splitter: commas, double-quoted fields, "" escapes.
std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  for (auto& f : out) f = std::string(text::trim(f));
  return out;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  return "\"" + text::replace_all(s, "\"", "\"\"") + "\"";
}

/// Non-blank CSV rows after the header, with 1-based line numbers.
std::vector<std::pair<std::size_t, std::vector<std::string>>> csv_rows(std::string_view text,
                                                                      const std::vector<std::string>& header,
                                                                      std::string_view what) {
  auto lines = text::split_lines(text);
  std::size_t first = 0;
  while (first < lines.size() && text::trim(lines[first]).empty()) ++first;
  if (first == lines.size()) throw InputFileError(std::string(what) + ": empty file", 0);

  auto head = split_csv_line(lines[first]);
  if (!head.empty() && head[0].rfind("\xEF\xBB\xBF", 0) == 0) head[0] = head[0].substr(3);
  if (head != header) {
    std::string expected;
    for (const auto& h : header) expected += (expected.empty() ? "" : ",") + h;
    throw InputFileError(std::string(what) + ": expected header '" + expected + "'", first + 1);
  }
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  for (std::size_t i = first + 1; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    auto fields = split_csv_line(lines[i]);
    if (fields.size() != header.size()) {
      throw InputFileError(std::string(what) + ": expected " + std::to_string(header.size()) + " fields", i + 1);
    }
    rows.emplace_back(i + 1, std::move(fields));
  }
  return rows;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputFileError("cannot read " + path.string(), 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<Task> parse_tasks_jsonl(std::string_view text, Subset subset) {
  std::vector<Task> out;
  std::set<std::string> seen;
  auto lines = text::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = text::trim(lines[i]);
    if (line.empty()) continue;
    Task t;
    try {
      json j = json::parse(line);
      t = task_from_line(j);
    } catch (const std::exception& e) {
      throw InputFileError("task suite line " + std::to_string(i + 1) + ": " + e.what(), i + 1);
    }
    if (auto problems = validate_task(t); !problems.empty()) {
      throw InputFileError("task suite line " + std::to_string(i + 1) + ": " + problems.front(), i + 1);
    }
    if (!seen.insert(t.id).second) {
      throw InputFileError("task suite line " + std::to_string(i + 1) + ": duplicate id '" + t.id + "'", i + 1);
    }
    if (subset == Subset::EvenIds) {
      auto n = trailing_integer(t.id);
      if (!n || *n % 2 != 0) continue;
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Task> load_tasks(const fs::path& path, Subset subset) {
  return parse_tasks_jsonl(slurp(path), subset);
}

std::map<std::string, Label> parse_labels_csv(std::string_view text) {
  std::map<std::string, Label> out;
  for (auto& [line, fields] : csv_rows(text, {"task_id", "label"}, "label file")) {
    auto label = parse_label(fields[1]);
    if (!label) {
      throw InputFileError("label file line " + std::to_string(line) + ": unknown label '" + fields[1] + "'", line);
    }
    if (!out.emplace(fields[0], *label).second) {
      throw InputFileError("label file line " + std::to_string(line) + ": duplicate task_id '" + fields[0] + "'",
                           line);
    }
  }
  return out;
}

std::map<std::string, Label> ingest_human_labels(const fs::path& path) { return parse_labels_csv(slurp(path)); }

std::string labels_csv(const std::map<std::string, Label>& labels) {
  std::string out = "task_id,label\n";
  for (const auto& [id, label] : labels) out += csv_field(id) + "," + std::string(to_string(label)) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

Percent Percent::from_ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) throw std::invalid_argument("percentage of an empty total");
  // Half up: floor((num * 10000 + den / 2) / den), kept exact by doubling.
  std::uint64_t h = (num * 20000 + den) / (2 * den);
  return Percent{static_cast<std::int64_t>(h), 2};
}

Percent Percent::parse(std::string_view text) {
  auto s = text::trim(text);
  if (!s.empty() && s.back() == '%') s = text::trim(s.substr(0, s.size() - 1));
  auto bad = [&] { return std::invalid_argument("not a percentage: '" + std::string(text) + "'"); };
  if (s.empty()) throw bad();

  auto dot = s.find('.');
  auto whole = s.substr(0, dot);
  auto frac = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
  if (whole.empty() || frac.size() > 2 || (dot != std::string_view::npos && frac.empty())) throw bad();
  for (char c : whole) {
    if (c < '0' || c > '9') throw bad();
  }
  for (char c : frac) {
    if (c < '0' || c > '9') throw bad();
  }
  std::int64_t w = 0;
  std::from_chars(whole.data(), whole.data() + whole.size(), w);
  std::int64_t f = 0;
  if (!frac.empty()) std::from_chars(frac.data(), frac.data() + frac.size(), f);
  if (frac.size() == 1) f *= 10;
  return Percent{w * 100 + f, static_cast<int>(frac.size())};
}

std::string Percent::number() const {
  std::int64_t whole = hundredths / 100;
  std::int64_t frac = hundredths % 100;
  std::string out = std::to_string(whole);
  if (decimals == 1) {
    out += "." + std::to_string(frac / 10);
  } else if (decimals >= 2) {
    out += ".";
    out += static_cast<char>('0' + frac / 10);
    out += static_cast<char>('0' + frac % 10);
  }
  return out;
}

std::string Percent::str() const { return number() + "%"; }

double ConfusionMatrix::accuracy() const {
  return n() ? static_cast<double>(correct()) / static_cast<double>(n()) : 0.0;
}

std::array<Percent, 4> ConfusionMatrix::cell_pcts() const {
  auto total = n();
  return {Percent::from_ratio(tp, total), Percent::from_ratio(tn, total), Percent::from_ratio(fp, total),
          Percent::from_ratio(fn, total)};
}

ConfusionMatrix confusion_matrix(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw std::invalid_argument("confusion matrix of no records");
  ConfusionMatrix m;
  for (const auto& r : records) {
    bool predicted = r.validator_label == Label::Complete;
    bool actual = r.human_label == Label::Complete;
    if (predicted && actual) {
      ++m.tp;
    } else if (!predicted && !actual) {
      ++m.tn;
    } else if (predicted) {
      ++m.fp;
    } else {
      ++m.fn;
    }
  }
  return m;
}

IdentityCheck accuracy_identity_check(const std::array<double, 4>& pcts, double reported_accuracy, double tol) {
  IdentityCheck c;
  c.tp_plus_tn = pcts[0] + pcts[1];
  c.cell_sum = pcts[0] + pcts[1] + pcts[2] + pcts[3];
  // Published figures carry two decimals; a tiny epsilon keeps binary
  // rounding from deciding boundary cases such as |70.05 - 70.04| vs 0.01.
  constexpr double eps = 1e-9;
  double sum_gap = std::abs(c.cell_sum - 100.0);
  c.ok = std::abs(c.tp_plus_tn - reported_accuracy) <= tol + eps && sum_gap <= kCellSumTolerance + eps;
  c.flagged = sum_gap > 4 * tol + eps;
  return c;
}

std::map<std::string, SiteAccuracy> per_site_accuracy(const std::vector<EvalRecord>& records) {
  std::map<std::string, SiteAccuracy> out;
  for (const auto& r : records) {
    auto& s = out[r.site];
    ++s.total;
    if (r.validator_label == r.human_label) ++s.matches;
  }
  return out;
}

SuccessReport success_rate(const std::vector<std::pair<Task, Label>>& outcomes) {
  if (outcomes.empty()) throw std::invalid_argument("success rate of no outcomes");
  SuccessReport rep;
  for (const auto& [task, label] : outcomes) {
    auto& s = rep.per_site[task.site];
    ++s.total;
    ++rep.overall.total;
    if (label == Label::Complete) {
      ++s.successes;
      ++rep.overall.successes;
    }
  }
  return rep;
}

JoinResult join_labels(const std::vector<ValidatorLabel>& validator, const std::map<std::string, Label>& human) {
  JoinResult out;
  std::set<std::string> judged;
  for (const auto& v : validator) {
    judged.insert(v.task_id);
    auto h = human.find(v.task_id);
    if (!v.label || h == human.end()) {
      ++out.unlabeled;
      continue;
    }
    out.records.push_back({v.task_id, v.site, *v.label, h->second});
  }
  for (const auto& [id, _] : human) {
    if (!judged.count(id)) out.unmatched_human_labels.push_back(id);
  }
  if (!out.unmatched_human_labels.empty()) {
    spdlog::warn("{} human label(s) name tasks without a validator verdict", out.unmatched_human_labels.size());
  }
  std::sort(out.records.begin(), out.records.end(),
            [](const auto& a, const auto& b) { return a.task_id < b.task_id; });
  return out;
}

// ---------------------------------------------------------------------------
// Verdict files

std::string verdict_records_jsonl(const std::vector<VerdictRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    json j{{"task_id", r.task_id}, {"site", r.site}, {"modality", to_string(r.modality)}, {"excluded", r.excluded}};
    j["verdict"] = r.verdict ? verdict_to_json(*r.verdict) : json(nullptr);
    j["error"] = r.error ? json(*r.error) : json(nullptr);
    out += j.dump(-1, ' ', false, json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

std::vector<VerdictRecord> parse_verdict_records(std::string_view jsonl) {
  std::vector<VerdictRecord> out;
  auto lines = text::split_lines(jsonl);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = text::trim(lines[i]);
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      VerdictRecord r;
      r.task_id = j.at("task_id").get<std::string>();
      r.site = j.at("site").get<std::string>();
      auto m = parse_modality(j.at("modality").get<std::string>());
      if (!m) throw std::invalid_argument("unknown modality");
      r.modality = *m;
      r.excluded = j.value("excluded", false);
      if (j.contains("verdict") && !j.at("verdict").is_null()) r.verdict = verdict_from_json(j.at("verdict"));
      if (j.contains("error") && !j.at("error").is_null()) r.error = j.at("error").get<std::string>();
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw InputFileError("verdict file line " + std::to_string(i + 1) + ": " + e.what(), i + 1);
    }
  }
  return out;
}

std::vector<ValidatorLabel> validator_labels(const std::vector<VerdictRecord>& records) {
  std::vector<ValidatorLabel> out;
  for (const auto& r : records) {
    if (r.excluded) continue;
    std::optional<Label> label;
    if (r.verdict) label = r.verdict->was_completed ? Label::Complete : Label::Incomplete;
    out.push_back({r.task_id, r.site, label});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

std::string_view modality_display_name(Modality modality) {
  switch (modality) {
    case Modality::TaskLogText:
      return "Task Log (text)";
    case Modality::ScreenshotsVision:
      return "Screenshots (vision)";
    case Modality::ScreenshotsPlusFinalResponse:
      return "Screenshot + Final Response (multimodal)";
  }
  return "unknown";
}

ConfusionRow confusion_row(std::string name, const ConfusionMatrix& m) {
  return {std::move(name), m.cell_pcts(), m.accuracy_pct(), m};
}

std::optional<ReportFormat> parse_report_format(std::string_view text) {
  if (text == "markdown" || text == "md") return ReportFormat::Markdown;
  if (text == "csv") return ReportFormat::Csv;
  if (text == "html") return ReportFormat::Html;
  return std::nullopt;
}

namespace {

constexpr std::array<std::string_view, 5> kConfusionColumns{"True Positive", "True Negative", "False Positive",
                                                           "False Negative", "Validator Accuracy"};

std::string cell(const std::map<std::string, Percent>& row, const std::string& site) {
  auto it = row.find(site);
  return it == row.end() ? "-" : it->second.str();
}

std::string md_escape(std::string_view s) { return text::replace_all(s, "|", "\\|"); }

void md_table(std::string& out, const std::vector<std::string>& header,
              const std::vector<std::vector<std::string>>& rows) {
  out += "|";
  for (const auto& h : header) out += " " + md_escape(h) + " |";
  out += "\n|";
  for (std::size_t i = 0; i < header.size(); ++i) out += i == 0 ? " --- |" : " ---: |";
  out += "\n";
  for (const auto& r : rows) {
    out += "|";
    for (const auto& c : r) out += " " + md_escape(c) + " |";
    out += "\n";
  }
}

std::vector<std::string> site_header(std::string first, const SiteTable& t) {
  std::vector<std::string> h{std::move(first)};
  h.insert(h.end(), t.sites.begin(), t.sites.end());
  if (!t.overall.empty()) h.emplace_back("Overall");
  return h;
}

std::vector<std::vector<std::string>> site_rows(const SiteTable& t) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& [name, cells] : t.rows) {
    std::vector<std::string> r{name};
    for (const auto& s : t.sites) r.push_back(cell(cells, s));
    if (!t.overall.empty()) r.push_back(cell(t.overall, name));
    rows.push_back(std::move(r));
  }
  return rows;
}

struct Section {
  std::string title;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::vector<Section> sections(const ReportTables& t) {
  std::vector<Section> out;

  Section confusion{"Validator confusion matrix", {"Validator"}, {}};
  confusion.header.insert(confusion.header.end(), kConfusionColumns.begin(), kConfusionColumns.end());
  for (const auto& r : t.confusion) {
    confusion.rows.push_back({r.name, r.cells[0].str(), r.cells[1].str(), r.cells[2].str(), r.cells[3].str(),
                              r.accuracy.str()});
  }
  out.push_back(std::move(confusion));

  out.push_back({"Validator accuracy by site", site_header("Validator", t.validator_by_site),
                 site_rows(t.validator_by_site)});

  Section success{"Success rate", {"Method", "Success Rate"}, {}};
  for (const auto& r : t.success) success.rows.push_back({r.name, r.rate.str()});
  out.push_back(std::move(success));

  out.push_back({"Success rate by site", site_header("Method", t.success_by_site), site_rows(t.success_by_site)});
  return out;
}

std::string html_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_markdown(const ReportTables& t) {
  std::string out = "# Evaluation report\n";
  for (const auto& s : sections(t)) {
    out += "\n## " + s.title + "\n\n";
    md_table(out, s.header, s.rows);
  }
  if (!t.notes.empty()) {
    out += "\n## Notes\n\n";
    for (const auto& n : t.notes) out += "- " + n + "\n";
  }
  return out;
}

std::string render_csv(const ReportTables& t) {
  std::string out = "table,row,column,value\n";
  auto row = [&](std::string_view table, std::string_view name, std::string_view column, const std::string& value) {
    out += std::string(table) + "," + csv_field(name) + "," + csv_field(column) + "," + value + "\n";
  };
  static constexpr std::array<std::string_view, 4> kCells{"tp", "tn", "fp", "fn"};
  for (const auto& r : t.confusion) {
    for (std::size_t i = 0; i < 4; ++i) row("confusion", r.name, kCells[i], r.cells[i].number());
    row("confusion", r.name, "accuracy", r.accuracy.number());
    if (r.counts) {
      row("confusion", r.name, "tp_count", std::to_string(r.counts->tp));
      row("confusion", r.name, "tn_count", std::to_string(r.counts->tn));
      row("confusion", r.name, "fp_count", std::to_string(r.counts->fp));
      row("confusion", r.name, "fn_count", std::to_string(r.counts->fn));
      row("confusion", r.name, "n", std::to_string(r.counts->n()));
    }
  }
  auto sites = [&](std::string_view table, const SiteTable& st) {
    for (const auto& [name, cells] : st.rows) {
      for (const auto& s : st.sites) {
        if (auto it = cells.find(s); it != cells.end()) row(table, name, s, it->second.number());
      }
      if (auto it = st.overall.find(name); it != st.overall.end()) row(table, name, "Overall", it->second.number());
    }
  };
  sites("validator_by_site", t.validator_by_site);
  for (const auto& r : t.success) row("success", r.name, "rate", r.rate.number());
  sites("success_by_site", t.success_by_site);
  return out;
}

std::string render_html(const ReportTables& t) {
  std::string out =
      "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>Evaluation report</title>\n"
      "<style>\nbody{font-family:sans-serif;margin:2em}\ntable{border-collapse:collapse;margin-bottom:2em}\n"
      "th,td{border:1px solid #999;padding:4px 8px}\ntd{text-align:right}\ntd:first-child{text-align:left}\n"
      "</style>\n</head>\n<body>\n<h1>Evaluation report</h1>\n";
  for (const auto& s : sections(t)) {
    out += "<h2>" + html_escape(s.title) + "</h2>\n<table>\n<tr>";
    for (const auto& h : s.header) out += "<th>" + html_escape(h) + "</th>";
    out += "</tr>\n";
    for (const auto& r : s.rows) {
      out += "<tr>";
      for (const auto& c : r) out += "<td>" + html_escape(c) + "</td>";
      out += "</tr>\n";
    }
    out += "</table>\n";
  }
  if (!t.notes.empty()) {
    out += "<h2>Notes</h2>\n<ul>\n";
    for (const auto& n : t.notes) out += "<li>" + html_escape(n) + "</li>\n";
    out += "</ul>\n";
  }
  out += "</body>\n</html>\n";
  return out;
}

std::vector<fs::path> emit_report(const ReportTables& t, const std::set<ReportFormat>& formats,
                                  const fs::path& out_dir) {
  std::vector<fs::path> written;
  if (formats.count(ReportFormat::Markdown)) {
    write_text_file(out_dir / "report.md", render_markdown(t));
    written.push_back(out_dir / "report.md");
  }
  if (formats.count(ReportFormat::Csv)) {
    write_text_file(out_dir / "metrics.csv", render_csv(t));
    written.push_back(out_dir / "metrics.csv");
  }
  if (formats.count(ReportFormat::Html)) {
    write_text_file(out_dir / "report.html", render_html(t));
    written.push_back(out_dir / "report.html");
  }
  return written;
}

namespace {

Percent parse_cell(const std::string& s, std::size_t line, const fs::path& file) {
  try {
    return Percent::parse(s);
  } catch (const std::invalid_argument& e) {
    throw InputFileError(file.string() + " line " + std::to_string(line) + ": " + e.what(), line);
  }
}

void load_site_table(const fs::path& file, SiteTable& table) {
  for (auto& [line, f] : csv_rows(slurp(file), {"name", "site", "value"}, file.string())) {
    auto value = parse_cell(f[2], line, file);
    if (f[1] == "Overall") {
      table.overall[f[0]] = value;
      continue;
    }
    if (std::find(table.sites.begin(), table.sites.end(), f[1]) == table.sites.end()) table.sites.push_back(f[1]);
    auto it = std::find_if(table.rows.begin(), table.rows.end(), [&](const auto& r) { return r.first == f[0]; });
    if (it == table.rows.end()) {
      table.rows.push_back({f[0], {}});
      it = std::prev(table.rows.end());
    }
    it->second[f[1]] = value;
  }
  for (const auto& [name, _] : table.overall) {
    bool known = std::any_of(table.rows.begin(), table.rows.end(), [&](const auto& r) { return r.first == name; });
    if (!known) table.rows.push_back({name, {}});
  }
}

}  // namespace

ReportTables load_reported_tables(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputFileError("not a directory: " + dir.string(), 0);
  ReportTables t;
  if (auto f = dir / "table1.csv"; fs::exists(f)) {
    for (auto& [line, c] : csv_rows(slurp(f), {"name", "tp", "tn", "fp", "fn", "accuracy"}, f.string())) {
      t.confusion.push_back({c[0],
                             {parse_cell(c[1], line, f), parse_cell(c[2], line, f), parse_cell(c[3], line, f),
                              parse_cell(c[4], line, f)},
                             parse_cell(c[5], line, f),
                             std::nullopt});
    }
  }
  if (auto f = dir / "table2.csv"; fs::exists(f)) load_site_table(f, t.validator_by_site);
  if (auto f = dir / "table3.csv"; fs::exists(f)) {
    for (auto& [line, c] : csv_rows(slurp(f), {"name", "rate"}, f.string())) {
      t.success.push_back({c[0], parse_cell(c[1], line, f)});
    }
  }
  if (auto f = dir / "table4.csv"; fs::exists(f)) load_site_table(f, t.success_by_site);
  return t;
}

// ---------------------------------------------------------------------------
// Suite runner

void SuiteConfig::validate() const {
  if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
  agent.validate();
  if (mode != RunMode::RunOnly) refine.validate();
}

SuccessReport SuiteResult::ground_truth_success() const {
  std::vector<std::pair<Task, Label>> pairs;
  for (const auto& o : outcomes) {
    auto truth = o.outcome.final_oracle_label();
    pairs.emplace_back(o.task, truth.value_or(Label::Incomplete));
  }
  return success_rate(pairs);
}

std::map<std::string, Label> SuiteResult::oracle_labels() const {
  std::map<std::string, Label> out;
  for (const auto& o : outcomes) {
    if (auto truth = o.outcome.final_oracle_label()) out[o.task.id] = *truth;
  }
  return out;
}

namespace {

TaskOutcome run_one(const Task& task, const EnvironmentFactory& make_env, const BackendFactory& make_backends,
                    const SuiteConfig& cfg) {
  TaskOutcome out{task, {}};
  auto& o = out.outcome;
  o.task_id = task.id;
  try {
    auto backends = make_backends(task);
    if (cfg.mode == RunMode::RunOnly) {
      auto env = make_env(task);
      o.unvalidated = run_task(backends.agent, task, *env, cfg.agent);
      if (o.unvalidated->termination == Termination::EnvironmentError) o.error = "environment error";
    } else {
      if (!backends.validator) throw ConfigError("no validator backend configured");
      RefineConfig rc = cfg.refine;
      if (cfg.mode == RunMode::NoRefine) rc.max_attempts = 1;
      o = run_with_refinement(backends.agent, *backends.validator, task, make_env, cfg.agent, rc, cfg.audit);
    }
  } catch (const std::exception& e) {
    o.error = e.what();
    spdlog::error("task {}: {}", task.id, e.what());
  }

  if (cfg.out_dir) {
    auto dir = *cfg.out_dir / archive_dir_name(task.id);
    try {
      if (cfg.mode == RunMode::RunOnly) {
        if (o.unvalidated) write_trajectory_archive(dir, task, *o.unvalidated);
      } else {
        write_outcome_archive(dir, task, o);
      }
    } catch (const Error& e) {
      if (!o.error) o.error = e.what();
      spdlog::error("task {}: {}", task.id, e.what());
    }
  }
  return out;
}

}  // namespace

SuiteResult run_suite(const std::vector<Task>& tasks, const EnvironmentFactory& make_env,
                      const BackendFactory& make_backends, const SuiteConfig& cfg) {
  cfg.validate();
  SuiteResult result;
  result.outcomes.resize(tasks.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      result.outcomes[i] = run_one(tasks[i], make_env, make_backends, cfg);
    }
  };
  {
    std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(cfg.parallelism), tasks.size());
    std::vector<std::jthread> pool;
    for (std::size_t k = 1; k < n; ++k) pool.emplace_back(worker);
    worker();
  }
  for (const auto& o : result.outcomes) {
    if (o.outcome.error) ++result.errored;
  }
  return result;
}

}  // namespace webrefine
