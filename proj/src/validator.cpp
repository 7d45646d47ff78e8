#include "webrefine/validator.hpp"

#include <spdlog/spdlog.h>

#include "webrefine/errors.hpp"
#include "webrefine/prompts.hpp"
#include "webrefine/text.hpp"

namespace webrefine {

using nlohmann::json;

void ValidatorConfig::validate() const {
  if (max_screenshots < 1) throw ConfigError("max_screenshots must be >= 1");
  if (vqa_variant && !uses_screenshots(modality)) {
    throw ConfigError("vqa_variant requires the screenshots or multimodal modality");
  }
  if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
}

std::vector<std::size_t> spread_indices(std::size_t n, std::size_t max_n) {
  std::vector<std::size_t> out;
  if (n == 0 || max_n == 0) return out;
  if (n <= max_n) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(i);
    return out;
  }
  if (max_n == 1) return {n - 1};  // the end state says the most about completion

  // i * (n-1) / (max_n-1), rounded half to even, in exact integer arithmetic.
  const std::size_t den = max_n - 1;
  for (std::size_t i = 0; i < max_n; ++i) {
    std::size_t num = i * (n - 1);
    std::size_t q = num / den;
    std::size_t r2 = 2 * (num % den);
    if (r2 > den || (r2 == den && q % 2 == 1)) ++q;
    out.push_back(q);
  }
  return out;
}

std::vector<ScreenshotRecord> select_screenshots(const Trajectory& t, int max_n, Modality modality) {
  if (max_n < 1) throw ConfigError("max_n must be >= 1");
  std::vector<const ScreenshotRecord*> captured;
  for (const auto& s : t.screenshots) {
    if (s.captured) captured.push_back(&s);
  }
  if (captured.empty()) {
    if (uses_screenshots(modality)) {
      throw ScreenshotlessTrajectory("task " + t.task_id + ": no screenshot was captured");
    }
    return {};
  }
  std::stable_sort(captured.begin(), captured.end(),
                   [](const auto* a, const auto* b) { return a->step_index < b->step_index; });

  std::vector<ScreenshotRecord> out;
  for (auto i : spread_indices(captured.size(), static_cast<std::size_t>(max_n))) {
    out.push_back(*captured[i]);
  }
  return out;
}

std::string serialize_planner_log(const std::vector<ChatEntry>& log) {
  std::string out;
  for (const auto& e : log) {
    if (!out.empty()) out += "\n\n";
    out += to_string(e.role);
    out += ": ";
    out += e.content;
  }
  return out;
}

BuiltPrompt build_prompt(const ValidatorConfig& cfg, const Task& task, const Trajectory& t) {
  cfg.validate();
  BuiltPrompt built;
  auto& req = built.request;
  req.model_id = cfg.backend_model_id;
  req.temperature = cfg.temperature;
  req.max_output_tokens = cfg.max_output_tokens;

  llm::Message msg{llm::Role::User, {}};
  auto add_text = [&](std::string s) { msg.parts.emplace_back(llm::TextPart{std::move(s)}); };

  if (cfg.modality == Modality::TaskLogText) {
    add_text(text::replace_all(prompts::validator_intro_task_log(), prompts::kTaskSlot, task.instruction));
    if (t.planner_log.empty()) {
      built.warnings.push_back("task " + t.task_id + ": planner_log is empty");
      spdlog::warn("{}", built.warnings.back());
    }
    add_text(serialize_planner_log(t.planner_log));
    add_text(std::string(prompts::validator_close_task_log()));
  } else {
    if (cfg.modality == Modality::ScreenshotsPlusFinalResponse && !t.final_response) {
      throw MissingFinalResponse("task " + t.task_id + ": multimodal validation needs a final response");
    }
    auto shots = select_screenshots(t, cfg.max_screenshots, cfg.modality);
    add_text(text::replace_all(prompts::validator_intro_screenshots(), prompts::kTaskSlot, task.instruction));
    for (auto& s : shots) msg.parts.emplace_back(llm::ImagePart{std::move(s.image)});
    if (cfg.modality == Modality::ScreenshotsPlusFinalResponse) {
      add_text("Final response: " + *t.final_response);
    }
    add_text(std::string(cfg.vqa_variant ? prompts::validator_close_vqa()
                                         : prompts::validator_close_screenshots()));
  }
  req.messages.push_back(std::move(msg));
  return built;
}

namespace {

/// End of the balanced-brace block opening at `open`, skipping braces inside
/// JSON strings; npos if it never closes.
std::size_t block_end(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::string_view::npos;
}

std::optional<VisualQuestion> to_visual_question(const json& item) {
  if (item.is_object()) {
    auto q = item.find("question");
    auto a = item.find("answer");
    if (q != item.end() && a != item.end() && q->is_string() && a->is_string()) {
      return VisualQuestion{q->get<std::string>(), a->get<std::string>()};
    }
    return std::nullopt;
  }
  if (item.is_array() && item.size() == 2 && item[0].is_string() && item[1].is_string()) {
    return VisualQuestion{item[0].get<std::string>(), item[1].get<std::string>()};
  }
  return std::nullopt;
}

std::optional<Verdict> verdict_from_object(const json& j, bool vqa_expected) {
  if (!j.is_object()) return std::nullopt;
  auto done = j.find("was_completed");
  auto why = j.find("rationale");
  if (done == j.end() || !done->is_boolean() || why == j.end() || !why->is_string()) return std::nullopt;

  Verdict v;
  v.was_completed = done->get<bool>();
  v.rationale = why->get<std::string>();
  if (vqa_expected) {
    auto vq = j.find("visual_questions");
    if (vq == j.end() || !vq->is_array()) return std::nullopt;
    std::vector<VisualQuestion> qs;
    for (const auto& item : *vq) {
      auto q = to_visual_question(item);
      if (!q) return std::nullopt;
      qs.push_back(std::move(*q));
    }
    v.visual_questions = std::move(qs);
  }
  return v;
}

}  // namespace

Verdict parse_verdict(std::string_view raw, bool vqa_expected) {
  auto fallback = [&] {
    Verdict v;
    v.was_completed = false;
    v.rationale = text::truncate_utf8(raw, kFallbackRationaleBytes);
    v.parse_status = ParseStatus::FallbackIncomplete;
    return v;
  };

  try {
    auto trimmed = text::trim(raw);
    json whole = json::parse(trimmed.begin(), trimmed.end(), nullptr, false);
    if (!whole.is_discarded()) {
      auto v = verdict_from_object(whole, vqa_expected);
      if (!v) return fallback();
      v->parse_status = ParseStatus::ParsedClean;
      return *v;
    }

    // First balanced-brace block that is valid JSON; fences need no special
    // handling because the block scan looks inside them anyway.
    for (std::size_t open = raw.find('{'); open != std::string_view::npos; open = raw.find('{', open + 1)) {
      auto close = block_end(raw, open);
      if (close == std::string_view::npos) continue;
      auto block = raw.substr(open, close - open + 1);
      json j = json::parse(block.begin(), block.end(), nullptr, false);
      if (j.is_discarded()) continue;
      auto v = verdict_from_object(j, vqa_expected);
      if (!v) return fallback();
      v->parse_status = ParseStatus::ParsedFromFence;
      return *v;
    }
  } catch (const std::exception& e) {
    spdlog::debug("verdict extraction failed: {}", e.what());
  }
  return fallback();
}

namespace {

std::string dump(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

json request_summary(const llm::ChatRequest& req) {
  json messages = json::array();
  for (const auto& m : req.messages) {
    json parts = json::array();
    for (const auto& p : m.parts) {
      if (const auto* t = std::get_if<llm::TextPart>(&p)) {
        parts.push_back({{"type", "text"}, {"text", t->text}});
      } else {
        parts.push_back({{"type", "image"}, {"png_bytes", std::get<llm::ImagePart>(p).png.size()}});
      }
    }
    messages.push_back({{"role", llm::to_string(m.role)}, {"parts", std::move(parts)}});
  }
  return {{"model", req.model_id}, {"temperature", req.temperature}, {"messages", std::move(messages)}};
}

}  // namespace

json verdict_to_json(const Verdict& v) {
  json j{{"was_completed", v.was_completed},
         {"rationale", v.rationale},
         {"parse_status", to_string(v.parse_status)}};
  if (v.visual_questions) {
    json qs = json::array();
    for (const auto& q : *v.visual_questions) qs.push_back({{"question", q.question}, {"answer", q.answer}});
    j["visual_questions"] = std::move(qs);
  }
  return j;
}

Verdict verdict_from_json(const json& j) {
  try {
    Verdict v;
    v.was_completed = j.at("was_completed").get<bool>();
    v.rationale = j.at("rationale").get<std::string>();
    auto status = parse_parse_status(j.at("parse_status").get<std::string>());
    if (!status) throw ArchiveError("unknown parse_status");
    v.parse_status = *status;
    if (j.contains("visual_questions")) {
      std::vector<VisualQuestion> qs;
      for (const auto& q : j.at("visual_questions")) {
        qs.push_back({q.at("question").get<std::string>(), q.at("answer").get<std::string>()});
      }
      v.visual_questions = std::move(qs);
    }
    return v;
  } catch (const json::exception& e) {
    throw ArchiveError(std::string("malformed verdict: ") + e.what());
  }
}

json audit_record_json(const AuditRecord& rec) {
  return {{"task_id", rec.task_id},
          {"modality", to_string(rec.modality)},
          {"request", request_summary(rec.request)},
          {"raw_reply", rec.raw_reply},
          {"verdict", verdict_to_json(rec.verdict)}};
}

AuditLog::AuditLog(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  file_.emplace(path, std::ios::app);
  if (!*file_) throw ArchiveError("cannot open audit log " + path.string());
}

void AuditLog::record(const AuditRecord& rec) {
  std::lock_guard lock(mu_);
  if (file_) {
    *file_ << dump(audit_record_json(rec)) << '\n';
    file_->flush();
  }
  records_.push_back(rec);
}

std::size_t AuditLog::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

std::vector<AuditRecord> AuditLog::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

Verdict validate(const ValidatorConfig& cfg, llm::Backend& backend, const Task& task, const Trajectory& t,
                 AuditLog* audit) {
  auto built = build_prompt(cfg, task, t);
  auto resp = llm::complete(backend, built.request, cfg.retry);
  auto verdict = parse_verdict(resp.text, cfg.vqa_variant);
  if (verdict.parse_status == ParseStatus::FallbackIncomplete) {
    spdlog::warn("task {}: validator reply was not usable JSON; labelled incomplete", task.id);
  }
  if (audit) audit->record({task.id, cfg.modality, std::move(built.request), resp.text, verdict});
  return verdict;
}

}  // namespace webrefine
