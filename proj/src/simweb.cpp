#include "webrefine/simweb.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "webrefine/errors.hpp"
#include "webrefine/png.hpp"
#include "webrefine/text.hpp"

namespace webrefine::simweb {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Parsing

void require_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                  const std::string& where) {
  if (!obj.is_object()) throw ScriptSemanticError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ScriptSemanticError(where + ": unknown key '" + key + "'");
    }
  }
}

std::string get_string(const json& obj, const char* key, const std::string& where,
                       bool required = true) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) throw ScriptSemanticError(where + ": missing '" + key + "'");
    return {};
  }
  if (!it->is_string()) throw ScriptSemanticError(where + ": '" + key + "' must be a string");
  return it->get<std::string>();
}

Condition parse_condition(const json& j, const std::string& where) {
  Condition c;
  if (j.is_boolean() && j.get<bool>()) return c;
  if (!j.is_object()) throw ScriptSemanticError(where + ": condition must be an object or true");
  if (j.contains("all") || j.contains("any")) {
    const char* key = j.contains("all") ? "all" : "any";
    require_keys(j, {key}, where);
    c.op = j.contains("all") ? Condition::Op::All : Condition::Op::Any;
    if (!j[key].is_array()) throw ScriptSemanticError(where + ": '" + key + "' must be an array");
    for (const auto& child : j[key]) c.children.push_back(parse_condition(child, where));
    return c;
  }
  if (j.contains("not")) {
    require_keys(j, {"not"}, where);
    c.op = Condition::Op::Not;
    c.children.push_back(parse_condition(j["not"], where));
    return c;
  }
  if (j.contains("page")) {
    require_keys(j, {"page"}, where);
    c.op = Condition::Op::Page;
    c.subject = get_string(j, "page", where);
    return c;
  }
  if (j.contains("form")) {
    require_keys(j, {"form", "equals", "contains"}, where);
    c.subject = get_string(j, "form", where);
    if (j.contains("equals")) {
      c.op = Condition::Op::FormEquals;
      c.value = get_string(j, "equals", where);
    } else {
      c.op = Condition::Op::FormContains;
      c.value = get_string(j, "contains", where);
    }
    return c;
  }
  if (j.contains("widget")) {
    require_keys(j, {"widget", "equals"}, where);
    c.op = Condition::Op::WidgetEquals;
    c.subject = get_string(j, "widget", where);
    c.value = get_string(j, "equals", where);
    return c;
  }
  throw ScriptSemanticError(where + ": unrecognised condition " + j.dump());
}

ElementSpec parse_element(const json& j, const std::string& where) {
  require_keys(j, {"id", "kind", "label", "transitions", "states"}, where);
  ElementSpec e;
  e.id = get_string(j, "id", where);
  std::string at = where + " element '" + e.id + "'";
  if (e.id.empty() || e.id.find_first_of(" \t\r\n") != std::string::npos) {
    throw ScriptSemanticError(at + ": id must be a non-empty token without whitespace");
  }
  auto kind = parse_element_kind(get_string(j, "kind", at));
  if (!kind) throw ScriptSemanticError(at + ": kind must be link, button, textbox or widget");
  e.kind = *kind;
  e.label = get_string(j, "label", at, false);
  if (auto it = j.find("transitions"); it != j.end()) {
    if (!it->is_array()) throw ScriptSemanticError(at + ": 'transitions' must be an array");
    for (const auto& t : *it) {
      require_keys(t, {"target", "when"}, at);
      Transition tr;
      tr.target = get_string(t, "target", at);
      if (t.contains("when")) tr.when = parse_condition(t["when"], at);
      e.transitions.push_back(std::move(tr));
    }
  }
  if (auto it = j.find("states"); it != j.end()) {
    if (!it->is_array()) throw ScriptSemanticError(at + ": 'states' must be an array");
    for (const auto& s : *it) {
      if (!s.is_string()) throw ScriptSemanticError(at + ": states must be strings");
      e.states.push_back(s.get<std::string>());
    }
  }
  if (e.kind == ElementKind::Widget && e.states.empty()) {
    throw ScriptSemanticError(at + ": widget needs at least one state");
  }
  if (e.kind != ElementKind::Widget && !e.states.empty()) {
    throw ScriptSemanticError(at + ": only widgets carry states");
  }
  return e;
}

void check_condition_refs(const Condition& c, const SiteScript& s, const std::string& where) {
  if (c.op == Condition::Op::Page && !s.pages.count(c.subject)) {
    throw ScriptSemanticError(where + " references undeclared page '" + c.subject + "'");
  }
  for (const auto& child : c.children) check_condition_refs(child, s, where);
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

std::string slug(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!out.empty() && out.back() != '-') {
      out.push_back('-');
    }
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out.empty() ? "site" : out;
}

// ---------------------------------------------------------------------------
// Rendering

std::string escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out.push_back(c);
    }
  }
  return out;
}

std::uint32_t fnv1a(std::string_view s, std::uint32_t seed = 2166136261u) {
  std::uint32_t h = seed;
  for (char c : s) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 16777619u;
  }
  return h;
}

std::string noise_script(std::size_t bytes, std::string_view seed) {
  std::string out;
  out.reserve(bytes + 64);
  std::uint32_t h = fnv1a(seed);
  for (int i = 0; out.size() < bytes; ++i) {
    h = h * 1664525u + 1013904223u;
    std::ostringstream line;
    line << "var _t" << i << "=\"" << std::hex << h << (h ^ 0x5bd1e995u) << "\";";
    out += line.str();
    out += '\n';
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// SiteScript

const ElementSpec* PageSpec::find(std::string_view element_id) const {
  for (const auto& e : elements) {
    if (e.id == element_id) return &e;
  }
  return nullptr;
}

const PageSpec& SiteScript::initial_page() const {
  for (const auto& [_, p] : pages) {
    if (p.initial) return p;
  }
  throw ScriptSemanticError("site '" + site_name + "' has no initial page");
}

const PageSpec& SiteScript::page(const std::string& id) const {
  auto it = pages.find(id);
  if (it == pages.end()) throw ScriptSemanticError("undeclared page '" + id + "'");
  return it->second;
}

std::string SiteScript::page_url(const std::string& page_id) const { return base_url + "/" + page_id; }

std::size_t SiteScript::element_count() const {
  std::size_t n = 0;
  for (const auto& [_, p] : pages) n += p.elements.size();
  return n;
}

SiteScript load_site(std::string_view script_text) {
  json root;
  try {
    root = json::parse(script_text);
  } catch (const json::parse_error& e) {
    auto byte = e.byte > 0 ? e.byte - 1 : 0;
    auto [line, col] = line_column(script_text, byte);
    throw ScriptSyntaxError("site script syntax error at line " + std::to_string(line) +
                                ", column " + std::to_string(col) + ": " + e.what(),
                            line, col);
  }

  require_keys(root,
               {"site_name", "base_url", "pages", "success_predicate", "screenshot_failure_plan",
                "environment_error_at_step"},
               "site script");
  SiteScript s;
  s.site_name = get_string(root, "site_name", "site script");
  if (s.site_name.empty()) throw ScriptSemanticError("site script: site_name must be non-empty");
  s.base_url = get_string(root, "base_url", "site script", false);
  if (s.base_url.empty()) s.base_url = "https://" + slug(s.site_name) + ".sim";
  while (!s.base_url.empty() && s.base_url.back() == '/') s.base_url.pop_back();

  auto pages = root.find("pages");
  if (pages == root.end() || !pages->is_object() || pages->empty()) {
    throw ScriptSemanticError("site script: 'pages' must be a non-empty object");
  }
  for (const auto& [id, pj] : pages->items()) {
    std::string where = "page '" + id + "'";
    require_keys(pj, {"title", "initial", "text", "elements", "noise_bytes"}, where);
    PageSpec p;
    p.id = id;
    p.title = get_string(pj, "title", where);
    if (auto it = pj.find("initial"); it != pj.end()) {
      if (!it->is_boolean()) throw ScriptSemanticError(where + ": 'initial' must be a boolean");
      p.initial = it->get<bool>();
    }
    if (auto it = pj.find("text"); it != pj.end()) {
      if (!it->is_array()) throw ScriptSemanticError(where + ": 'text' must be an array");
      for (const auto& t : *it) {
        if (!t.is_string()) throw ScriptSemanticError(where + ": text lines must be strings");
        p.text.push_back(t.get<std::string>());
      }
    }
    if (auto it = pj.find("noise_bytes"); it != pj.end()) {
      if (!it->is_number_unsigned()) {
        throw ScriptSemanticError(where + ": 'noise_bytes' must be a non-negative integer");
      }
      p.noise_bytes = it->get<std::size_t>();
    }
    std::set<std::string> ids;
    if (auto it = pj.find("elements"); it != pj.end()) {
      if (!it->is_array()) throw ScriptSemanticError(where + ": 'elements' must be an array");
      for (const auto& ej : *it) {
        auto e = parse_element(ej, where);
        if (!ids.insert(e.id).second) {
          throw ScriptSemanticError(where + ": duplicate element id '" + e.id + "'");
        }
        p.elements.push_back(std::move(e));
      }
    }
    s.pages.emplace(id, std::move(p));
  }

  auto initial = std::count_if(s.pages.begin(), s.pages.end(),
                               [](const auto& kv) { return kv.second.initial; });
  if (initial != 1) {
    throw ScriptSemanticError("site script: exactly one page must be marked initial, found " +
                              std::to_string(initial));
  }
  for (const auto& [pid, p] : s.pages) {
    for (const auto& e : p.elements) {
      for (const auto& t : e.transitions) {
        if (!s.pages.count(t.target)) {
          throw ScriptSemanticError("element '" + e.id + "' on page '" + pid +
                                    "' targets undeclared page '" + t.target + "'");
        }
        if (t.when) check_condition_refs(*t.when, s, "element '" + e.id + "'");
      }
    }
  }

  if (!root.contains("success_predicate")) {
    throw ScriptSemanticError("site script: missing 'success_predicate'");
  }
  s.success_predicate = parse_condition(root["success_predicate"], "success_predicate");
  check_condition_refs(s.success_predicate, s, "success_predicate");

  if (auto it = root.find("screenshot_failure_plan"); it != root.end()) {
    if (!it->is_array()) throw ScriptSemanticError("screenshot_failure_plan must be an array");
    for (const auto& fj : *it) {
      require_keys(fj, {"step_index", "every_step", "failing_attempts"}, "screenshot_failure_plan");
      ScreenshotFailure f;
      bool every = fj.value("every_step", false);
      if (every) {
        f.step_index = -1;
      } else if (fj.contains("step_index") && fj["step_index"].is_number_unsigned()) {
        f.step_index = fj["step_index"].get<int>();
      } else {
        throw ScriptSemanticError("screenshot_failure_plan: entry needs step_index >= 0 or every_step");
      }
      if (!fj.contains("failing_attempts") || !fj["failing_attempts"].is_number_unsigned()) {
        throw ScriptSemanticError("screenshot_failure_plan: failing_attempts must be >= 0");
      }
      f.failing_attempts = fj["failing_attempts"].get<int>();
      s.screenshot_failure_plan.push_back(f);
    }
  }
  if (auto it = root.find("environment_error_at_step"); it != root.end()) {
    if (!it->is_number_unsigned()) {
      throw ScriptSemanticError("environment_error_at_step must be a non-negative integer");
    }
    s.environment_error_at_step = it->get<int>();
  }
  return s;
}

SiteScript load_site_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open site script " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return load_site(buf.str());
  } catch (const ScriptSyntaxError& e) {
    throw ScriptSyntaxError(path.string() + ": " + e.what(), e.line(), e.column());
  } catch (const ScriptSemanticError& e) {
    throw ScriptSemanticError(path.string() + ": " + e.what());
  }
}

std::map<std::string, std::shared_ptr<const SiteScript>> load_site_directory(
    const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ConfigError("site script directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::map<std::string, std::shared_ptr<const SiteScript>> out;
  for (const auto& f : files) {
    auto script = std::make_shared<const SiteScript>(load_site_file(f));
    if (!out.emplace(script->site_name, script).second) {
      throw ConfigError("duplicate site_name '" + script->site_name + "' in " + f.string());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// State

SimState initial_state(const SiteScript& script) {
  SimState s;
  s.current_page = script.initial_page().id;
  return s;
}

std::string widget_value(const SimState& state, const ElementSpec& widget) {
  if (auto it = state.widget_state.find(widget.id); it != state.widget_state.end()) return it->second;
  return widget.states.empty() ? std::string{} : widget.states.front();
}

namespace {
const ElementSpec* find_widget(const SiteScript& script, const std::string& id) {
  for (const auto& [_, p] : script.pages) {
    if (const auto* e = p.find(id); e && e->kind == ElementKind::Widget) return e;
  }
  return nullptr;
}
}  // namespace

bool evaluate(const Condition& c, const SimState& state, const SiteScript& script) {
  switch (c.op) {
    case Condition::Op::Always:
      return true;
    case Condition::Op::Page:
      return state.current_page == c.subject;
    case Condition::Op::FormEquals: {
      auto it = state.form_state.find(c.subject);
      return it != state.form_state.end() && it->second == c.value;
    }
    case Condition::Op::FormContains: {
      auto it = state.form_state.find(c.subject);
      return it != state.form_state.end() && text::contains_icase(it->second, c.value);
    }
    case Condition::Op::WidgetEquals: {
      if (auto it = state.widget_state.find(c.subject); it != state.widget_state.end()) {
        return it->second == c.value;
      }
      const auto* w = find_widget(script, c.subject);
      return w && widget_value(state, *w) == c.value;
    }
    case Condition::Op::All:
      return std::all_of(c.children.begin(), c.children.end(),
                         [&](const Condition& x) { return evaluate(x, state, script); });
    case Condition::Op::Any:
      return std::any_of(c.children.begin(), c.children.end(),
                         [&](const Condition& x) { return evaluate(x, state, script); });
    case Condition::Op::Not:
      return !evaluate(c.children.front(), state, script);
  }
  return false;
}

std::string render_dom(const SimState& state, const SiteScript& script) {
  const PageSpec& page = script.page(state.current_page);
  const std::string site = escape(script.site_name);
  std::string html;
  html.reserve(2048 + page.noise_bytes);
  html += "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n";
  html += "<title>" + escape(page.title) + "</title>\n";
  html += "<style>.sim-chrome{font:12px sans-serif;color:#555}.sim-row{margin:4px 0}</style>\n";
  html += "<script>window.simAnalytics={site:\"" + escape(slug(script.site_name)) +
          "\",page:\"" + escape(page.id) + "\"};</script>\n";
  if (page.noise_bytes > 0) {
    html += "<script>\n" + noise_script(page.noise_bytes, script.site_name + page.id) + "</script>\n";
  }
  html += "</head>\n<body>\n<!-- simweb page " + escape(page.id) + " -->\n";
  html += "<header class=\"sim-chrome\">\n";
  for (int i = 0; i < 3; ++i) {
    html += "<div class=\"sim-promo\">Sign up for the " + site + " newsletter and save 10%</div>\n";
  }
  html += "</header>\n<main class=\"sim-page\">\n";
  for (const auto& line : page.text) html += "<p>" + escape(line) + "</p>\n";
  for (const auto& e : page.elements) {
    const std::string id = escape(e.id);
    const std::string label = escape(e.label);
    html += "<div class=\"sim-row\">";
    switch (e.kind) {
      case ElementKind::Link: {
        std::string href = e.transitions.empty() ? "#" : script.page_url(e.transitions.front().target);
        html += "<a id=\"" + id + "\" href=\"" + escape(href) + "\">" + label + "</a>";
        break;
      }
      case ElementKind::Button:
        html += "<button id=\"" + id + "\" type=\"button\">" + label + "</button>";
        break;
      case ElementKind::Textbox: {
        std::string value;
        if (auto it = state.form_state.find(e.id); it != state.form_state.end()) value = it->second;
        html += "<input id=\"" + id + "\" type=\"text\" aria-label=\"" + label + "\" value=\"" +
                escape(value) + "\">";
        break;
      }
      case ElementKind::Widget: {
        std::string v = escape(widget_value(state, e));
        html += "<div id=\"" + id + "\" role=\"listbox\" aria-label=\"" + label + "\" aria-valuetext=\"" + v +
                "\">" + label + ": " + v + "</div>";
        break;
      }
    }
    html += "</div>\n";
  }
  html += "</main>\n<footer class=\"sim-chrome\">\n";
  for (int i = 0; i < 3; ++i) {
    html += "<div class=\"sim-legal\">&copy; " + site + ". All rights reserved.</div>\n";
  }
  html += "</footer>\n</body>\n</html>\n";
  return html;
}

ScreenshotRecord capture_screenshot(const SimState& state, const SiteScript& script, int step_index,
                                    int max_attempts) {
  if (max_attempts < 1) throw ConfigError("screenshot max_attempts must be >= 1");
  ScreenshotRecord rec;
  rec.step_index = step_index;

  int failing = 0;
  for (const auto& f : script.screenshot_failure_plan) {
    if (f.step_index < 0 || f.step_index == step_index) {
      failing = f.failing_attempts;
      break;
    }
  }
  if (failing >= max_attempts) {
    rec.attempts_used = max_attempts;
    rec.captured = false;
    return rec;
  }
  rec.attempts_used = failing + 1;
  rec.captured = true;

  // One 16px band for the page header, then one per text line and element.
  const PageSpec& page = script.page(state.current_page);
  constexpr std::uint32_t kWidth = 160;
  constexpr std::uint32_t kBand = 16;
  const std::uint32_t bands = static_cast<std::uint32_t>(1 + page.text.size() + page.elements.size());
  const std::uint32_t height = bands * kBand;
  std::vector<std::uint8_t> rgb(std::size_t{kWidth} * height * 3, 0xF4);

  auto fill = [&](std::uint32_t band, std::uint32_t x0, std::uint32_t x1, std::uint32_t color) {
    for (std::uint32_t y = band * kBand + 2; y < (band + 1) * kBand - 2; ++y) {
      for (std::uint32_t x = x0; x < x1 && x < kWidth; ++x) {
        auto* px = &rgb[(std::size_t{y} * kWidth + x) * 3];
        px[0] = static_cast<std::uint8_t>(color >> 16);
        px[1] = static_cast<std::uint8_t>(color >> 8);
        px[2] = static_cast<std::uint8_t>(color);
      }
    }
  };

  fill(0, 0, kWidth, 0x203040u | (fnv1a(page.id) & 0x3F3F3Fu));
  std::uint32_t band = 1;
  for (const auto& line : page.text) {
    fill(band++, 4, 8 + static_cast<std::uint32_t>(std::min<std::size_t>(line.size(), 140)), 0x909090u);
  }
  for (const auto& e : page.elements) {
    std::uint32_t base = 0;
    std::string detail;
    switch (e.kind) {
      case ElementKind::Link:
        base = 0x2050C0u;
        break;
      case ElementKind::Button:
        base = 0x30A050u;
        break;
      case ElementKind::Textbox:
        base = 0xD0D0D0u;
        if (auto it = state.form_state.find(e.id); it != state.form_state.end()) detail = it->second;
        break;
      case ElementKind::Widget:
        base = 0xC08020u;
        detail = widget_value(state, e);
        break;
    }
    std::uint32_t width = 24 + static_cast<std::uint32_t>(std::min<std::size_t>(e.label.size() * 4, 100));
    fill(band, 4, 4 + width, base);
    if (!detail.empty()) {
      std::uint32_t h = fnv1a(detail);
      fill(band, 8 + width, 8 + width + 8 + (h % 32), 0x404040u | (h & 0x7F7F7Fu));
    }
    ++band;
  }
  rec.image = png::encode_rgb(kWidth, height, rgb);
  return rec;
}

// ---------------------------------------------------------------------------
// Environment

SimWebEnvironment::SimWebEnvironment(std::shared_ptr<const SiteScript> script)
    : script_(std::move(script)), state_(initial_state(*script_)) {}

Observation SimWebEnvironment::reset(const Task&) {
  state_ = initial_state(*script_);
  done_ = false;
  return observe({});
}

Observation SimWebEnvironment::observe(std::string feedback) const {
  const PageSpec& page = script_->page(state_.current_page);
  Observation obs;
  obs.url = script_->page_url(page.id);
  obs.title = page.title;
  obs.distilled_dom = format_observation(distill(render_dom(state_, *script_)), obs.url, obs.title);
  obs.feedback = std::move(feedback);
  return obs;
}

void SimWebEnvironment::follow(const ElementSpec& element) {
  for (const auto& t : element.transitions) {
    if (!t.when || evaluate(*t.when, state_, *script_)) {
      state_.current_page = t.target;
      state_.focused.clear();
      return;
    }
  }
}

std::string SimWebEnvironment::apply(const ActionCommand& action) {
  const PageSpec& page = script_->page(state_.current_page);
  auto missing = [](const std::string& ref) { return "action failed: no such element '" + ref + "'"; };

  return std::visit(
      [&](const auto& a) -> std::string {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, action::Navigate>) {
          for (const auto& [id, _] : script_->pages) {
            if (script_->page_url(id) == a.url) {
              state_.current_page = id;
              state_.focused.clear();
              return "navigated to " + a.url;
            }
          }
          return "action failed: unknown url '" + a.url + "'";
        } else if constexpr (std::is_same_v<T, action::Click>) {
          const ElementSpec* e = page.find(a.ref);
          if (!e) return missing(a.ref);
          switch (e->kind) {
            case ElementKind::Textbox:
              state_.focused = e->id;
              return "focused " + e->id;
            case ElementKind::Widget: {
              auto current = widget_value(state_, *e);
              auto it = std::find(e->states.begin(), e->states.end(), current);
              std::size_t next = it == e->states.end() ? 0 : (it - e->states.begin() + 1) % e->states.size();
              state_.widget_state[e->id] = e->states[next];
              std::string msg = e->id + " set to " + e->states[next];
              follow(*e);
              return msg;
            }
            default:
              follow(*e);
              return "clicked " + e->id;
          }
        } else if constexpr (std::is_same_v<T, action::Type>) {
          const ElementSpec* e = page.find(a.ref);
          if (!e) return missing(a.ref);
          if (e->kind != ElementKind::Textbox) return "action failed: '" + a.ref + "' is not a textbox";
          state_.form_state[e->id] = a.text;
          state_.focused = e->id;
          return "typed \"" + a.text + "\" into " + e->id;
        } else if constexpr (std::is_same_v<T, action::PressEnter>) {
          const ElementSpec* e = state_.focused.empty() ? nullptr : page.find(state_.focused);
          if (!e) return "pressed enter (no focused input)";
          follow(*e);
          return "pressed enter in " + e->id;
        } else if constexpr (std::is_same_v<T, action::Scroll>) {
          return a.direction == ScrollDirection::Up ? "scrolled up" : "scrolled down";
        } else if constexpr (std::is_same_v<T, action::ReadText>) {
          const ElementSpec* e = page.find(a.ref);
          if (!e) return missing(a.ref);
          std::string value = e->label;
          if (e->kind == ElementKind::Widget) value += ": " + widget_value(state_, *e);
          if (e->kind == ElementKind::Textbox) {
            if (auto it = state_.form_state.find(e->id); it != state_.form_state.end()) {
              value += ": " + it->second;
            }
          }
          return "text of " + e->id + ": " + value;
        } else {
          done_ = true;
          return "stopped";
        }
      },
      action);
}

StepResult SimWebEnvironment::step(const ActionCommand& action) {
  if (done_) throw EpisodeFinished("episode already finished; reset the environment first");
  if (script_->environment_error_at_step && *script_->environment_error_at_step == state_.step_count) {
    throw EnvironmentError("simulated environment failure at step " + std::to_string(state_.step_count));
  }
  std::string feedback = apply(action);
  ++state_.step_count;
  bool success = evaluate(script_->success_predicate, state_, *script_);
  if (success) done_ = true;
  StepResult result;
  result.done = done_;
  result.reward = done_ && success ? 1.0 : 0.0;
  result.observation = observe(std::move(feedback));
  return result;
}

ScreenshotRecord SimWebEnvironment::capture_screenshot(int step_index, int max_attempts) {
  return simweb::capture_screenshot(state_, *script_, step_index, max_attempts);
}

std::optional<bool> SimWebEnvironment::ground_truth_success() const {
  return evaluate(script_->success_predicate, state_, *script_);
}

EnvironmentFactory environment_factory(std::map<std::string, std::shared_ptr<const SiteScript>> scripts) {
  return [scripts = std::move(scripts)](const Task& task) -> std::unique_ptr<WebEnvironment> {
    auto it = scripts.find(task.site);
    if (it == scripts.end()) throw ConfigError("no site script for site '" + task.site + "'");
    return std::make_unique<SimWebEnvironment>(it->second);
  };
}

}  // namespace webrefine::simweb
