#include "webrefine/dom_distill.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <set>
#include <unordered_map>

#include "webrefine/text.hpp"

namespace webrefine {

namespace {

constexpr std::size_t kMaxDepth = 512;
constexpr std::size_t kMaxLabelBytes = 160;

using Attributes = std::vector<std::pair<std::string, std::string>>;

struct Node {
  bool is_text = false;
  std::string tag;
  Attributes attrs;
  std::string text;
  std::vector<std::size_t> children;
};

const std::string* find_attr(const Attributes& attrs, std::string_view name) {
  for (const auto& [k, v] : attrs) {
    if (k == name) return &v;
  }
  return nullptr;
}

bool in_set(std::string_view tag, std::initializer_list<std::string_view> set) {
  return std::find(set.begin(), set.end(), tag) != set.end();
}

bool is_void(std::string_view tag) {
  return in_set(tag, {"area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta",
                      "param", "source", "track", "wbr"});
}

bool is_raw_text(std::string_view tag) {
  return in_set(tag, {"script", "style", "textarea", "title", "xmp", "iframe", "noembed"});
}

bool is_skipped(std::string_view tag) {
  return in_set(tag, {"script", "style", "noscript", "template", "iframe", "noembed", "xmp", "svg",
                      "math"});
}

bool is_block(std::string_view tag) {
  return in_set(tag, {"address", "article", "aside", "blockquote", "body", "br",  "dd",
                      "details", "dialog", "div", "dl",    "dt",    "fieldset", "figcaption",
                      "figure", "footer", "form", "h1",   "h2",    "h3",    "h4",  "h5",
                      "h6",     "header", "hr",   "html", "li",    "main",  "nav", "ol",
                      "p",      "pre",    "section", "summary", "table", "tbody", "td",
                      "tfoot",  "th",     "thead", "tr",  "ul",    "option"});
}

bool auto_closes_sibling(std::string_view tag) {
  return in_set(tag, {"p", "li", "option", "tr", "td", "th", "dt", "dd"});
}

bool is_structural(std::string_view tag) {
  return in_set(tag, {"html", "head", "body", "meta", "link", "title", "base"});
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// ---------------------------------------------------------------------------
// Tokenizer + tree builder. Mismatched end tags are ignored, unclosed elements
// are closed at end of input.

class TreeBuilder {
 public:
  explicit TreeBuilder(std::string_view html) : src_(html) {
    nodes_.push_back(Node{});
    nodes_[0].tag = "#document";
    stack_.push_back(0);
  }

  std::vector<Node> build() {
    while (pos_ < src_.size()) {
      if (src_[pos_] == '<' && lex_markup()) continue;
      lex_text();
    }
    return std::move(nodes_);
  }

 private:
  bool at_letter(std::size_t p) const {
    return p < src_.size() && std::isalpha(static_cast<unsigned char>(src_[p]));
  }

  void lex_text() {
    std::size_t start = pos_;
    // A '<' that did not start markup is literal text.
    pos_ = src_.find('<', pos_ + 1);
    if (pos_ == std::string_view::npos) pos_ = src_.size();
    add_text(decode_html_entities(src_.substr(start, pos_ - start)));
  }

  bool lex_markup() {
    if (src_.compare(pos_, 4, "<!--") == 0) {
      auto end = src_.find("-->", pos_ + 4);
      pos_ = end == std::string_view::npos ? src_.size() : end + 3;
      return true;
    }
    if (pos_ + 1 < src_.size() && (src_[pos_ + 1] == '!' || src_[pos_ + 1] == '?')) {
      auto end = src_.find('>', pos_);
      pos_ = end == std::string_view::npos ? src_.size() : end + 1;
      return true;
    }
    if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '/' && at_letter(pos_ + 2)) {
      pos_ += 2;
      auto name = read_name();
      auto end = src_.find('>', pos_);
      pos_ = end == std::string_view::npos ? src_.size() : end + 1;
      close_element(name);
      return true;
    }
    if (at_letter(pos_ + 1)) {
      ++pos_;
      auto name = read_name();
      Attributes attrs;
      bool self_closing = read_attributes(attrs);
      open_element(name, std::move(attrs), self_closing);
      return true;
    }
    return false;
  }

  std::string read_name() {
    std::size_t start = pos_;
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == ':' || c == '_') {
        ++pos_;
      } else {
        break;
      }
    }
    return text::to_lower(src_.substr(start, pos_ - start));
  }

  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  // Returns true for a self-closing tag. Leaves pos_ after the closing '>'.
  bool read_attributes(Attributes& attrs) {
    while (true) {
      skip_space();
      if (pos_ >= src_.size()) return false;
      char c = src_[pos_];
      if (c == '>') {
        ++pos_;
        return false;
      }
      if (c == '/') {
        ++pos_;
        skip_space();
        if (pos_ < src_.size() && src_[pos_] == '>') {
          ++pos_;
          return true;
        }
        continue;
      }
      std::size_t start = pos_;
      while (pos_ < src_.size()) {
        char d = src_[pos_];
        if (std::isspace(static_cast<unsigned char>(d)) || d == '=' || d == '>' || d == '/') break;
        ++pos_;
      }
      if (pos_ == start) {
        ++pos_;  // stray character such as a lone quote
        continue;
      }
      std::string name = text::to_lower(src_.substr(start, pos_ - start));
      std::string value;
      skip_space();
      if (pos_ < src_.size() && src_[pos_] == '=') {
        ++pos_;
        skip_space();
        if (pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\'')) {
          char quote = src_[pos_++];
          auto end = src_.find(quote, pos_);
          if (end == std::string_view::npos) end = src_.size();
          value = decode_html_entities(src_.substr(pos_, end - pos_));
          pos_ = std::min(end + 1, src_.size());
        } else {
          std::size_t vstart = pos_;
          while (pos_ < src_.size() && !std::isspace(static_cast<unsigned char>(src_[pos_])) &&
                 src_[pos_] != '>') {
            ++pos_;
          }
          value = decode_html_entities(src_.substr(vstart, pos_ - vstart));
        }
      }
      if (!find_attr(attrs, name)) attrs.emplace_back(std::move(name), std::move(value));
    }
  }

  std::size_t current() const { return stack_.back(); }

  void add_text(std::string content) {
    if (content.empty()) return;
    auto& parent = nodes_[current()];
    if (!parent.children.empty() && nodes_[parent.children.back()].is_text) {
      nodes_[parent.children.back()].text += content;
      return;
    }
    Node n;
    n.is_text = true;
    n.text = std::move(content);
    nodes_.push_back(std::move(n));
    nodes_[current()].children.push_back(nodes_.size() - 1);
  }

  void open_element(const std::string& name, Attributes attrs, bool self_closing) {
    if (auto_closes_sibling(name) && nodes_[current()].tag == name) stack_.pop_back();
    Node n;
    n.tag = name;
    n.attrs = std::move(attrs);
    nodes_.push_back(std::move(n));
    std::size_t idx = nodes_.size() - 1;
    nodes_[current()].children.push_back(idx);

    if (is_raw_text(name) && !self_closing) {
      std::size_t end = find_closing(name);
      auto body = src_.substr(pos_, end - pos_);
      if (name == "textarea" || name == "title") {
        Node t;
        t.is_text = true;
        t.text = decode_html_entities(body);
        nodes_.push_back(std::move(t));
        nodes_[idx].children.push_back(nodes_.size() - 1);
      }
      pos_ = end;
      if (pos_ < src_.size()) {
        auto close = src_.find('>', pos_);
        pos_ = close == std::string_view::npos ? src_.size() : close + 1;
      }
      return;
    }
    if (is_void(name) || self_closing || stack_.size() >= kMaxDepth) return;
    stack_.push_back(idx);
  }

  std::size_t find_closing(const std::string& name) const {
    std::size_t p = pos_;
    while (true) {
      p = src_.find("</", p);
      if (p == std::string_view::npos) return src_.size();
      if (text::starts_with_icase(src_.substr(p + 2), name)) {
        std::size_t after = p + 2 + name.size();
        if (after >= src_.size() || !std::isalnum(static_cast<unsigned char>(src_[after]))) return p;
      }
      p += 2;
    }
  }

  void close_element(const std::string& name) {
    for (std::size_t i = stack_.size(); i-- > 1;) {
      if (nodes_[stack_[i]].tag == name) {
        stack_.resize(i);
        return;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::vector<Node> nodes_;
  std::vector<std::size_t> stack_;
};

// ---------------------------------------------------------------------------
// Extraction

enum class Interactivity { None, Control, Generic };

Interactivity classify(const Node& n) {
  if (n.is_text) return Interactivity::None;
  if (n.tag == "input") {
    const auto* type = find_attr(n.attrs, "type");
    if (type && text::to_lower(*type) == "hidden") return Interactivity::None;
    return Interactivity::Control;
  }
  if (in_set(n.tag, {"a", "button", "select", "textarea"})) return Interactivity::Control;
  if (is_structural(n.tag) || is_skipped(n.tag)) return Interactivity::None;
  if (find_attr(n.attrs, "id") || find_attr(n.attrs, "role")) return Interactivity::Generic;
  return Interactivity::None;
}

ElementKind kind_of(const Node& n) {
  std::string role;
  if (const auto* r = find_attr(n.attrs, "role")) role = text::to_lower(text::trim(*r));
  if (n.tag == "a" || role == "link") return ElementKind::Link;
  if (n.tag == "button" || role == "button") return ElementKind::Button;
  if (n.tag == "input") {
    std::string type = "text";
    if (const auto* t = find_attr(n.attrs, "type")) type = text::to_lower(text::trim(*t));
    if (in_set(type, {"button", "submit", "reset", "image"})) return ElementKind::Button;
    if (in_set(type, {"checkbox", "radio", "range", "color", "file"})) return ElementKind::Widget;
    return ElementKind::Textbox;
  }
  if (n.tag == "textarea" || role == "textbox" || role == "searchbox") return ElementKind::Textbox;
  return ElementKind::Widget;
}

std::string first_attr(const Node& n, std::initializer_list<std::string_view> names) {
  for (auto name : names) {
    if (const auto* v = find_attr(n.attrs, name)) {
      auto collapsed = text::collapse_whitespace(*v);
      if (!collapsed.empty()) return collapsed;
    }
  }
  return {};
}

class Extractor {
 public:
  explicit Extractor(const std::vector<Node>& nodes) : nodes_(nodes) {}

  void run() {
    walk(0, nullptr, 0);
    flush_block();
  }

  std::string title;
  std::vector<DistilledElement> elements;
  std::vector<std::string> blocks;

 private:
  void flush_block() {
    auto collapsed = text::collapse_whitespace(block_);
    if (!collapsed.empty()) blocks.push_back(std::move(collapsed));
    block_.clear();
  }

  // `sink` receives text when non-null (label collection); otherwise text
  // flows into the current visible-text block.
  void walk(std::size_t idx, std::string* sink, std::size_t depth) {
    const Node& n = nodes_[idx];
    if (n.is_text) {
      (sink ? *sink : block_) += n.text;
      return;
    }
    if (n.tag == "title") {
      if (title.empty() && !n.children.empty()) {
        title = text::collapse_whitespace(nodes_[n.children.front()].text);
      }
      return;
    }
    if (is_skipped(n.tag) || depth > kMaxDepth) return;

    const bool block = is_block(n.tag);
    if (block) {
      if (sink) {
        *sink += ' ';
      } else {
        flush_block();
      }
    }

    switch (classify(n)) {
      case Interactivity::Control:
        emit_control(n, depth);
        break;
      case Interactivity::Generic:
        emit_generic(n, sink, depth);
        break;
      case Interactivity::None:
        for (auto c : n.children) walk(c, sink, depth + 1);
        break;
    }

    if (block) {
      if (sink) {
        *sink += ' ';
      } else {
        flush_block();
      }
    }
  }

  std::size_t reserve(const Node& n) {
    DistilledElement e;
    e.kind = kind_of(n);
    if (const auto* id = find_attr(n.attrs, "id")) e.ref = text::collapse_whitespace(*id);
    elements.push_back(std::move(e));
    return elements.size() - 1;
  }

  void emit_control(const Node& n, std::size_t depth) {
    std::size_t slot = reserve(n);
    std::string own_text;
    std::string dropped;
    std::string value;

    if (n.tag == "select") {
      for (auto c : n.children) walk(c, &dropped, depth + 1);
      value = selected_option(n);
    } else if (n.tag == "textarea") {
      for (auto c : n.children) walk(c, &value, depth + 1);
      value = text::collapse_whitespace(value);
    } else {
      for (auto c : n.children) walk(c, &own_text, depth + 1);
    }

    auto& e = elements[slot];
    auto aria = first_attr(n, {"aria-label"});
    if (n.tag == "input") {
      if (e.kind == ElementKind::Button) {
        e.label = first_attr(n, {"value", "aria-label", "title", "alt", "name"});
      } else {
        e.label = first_attr(n, {"aria-label", "placeholder", "title", "name"});
        if (const auto* v = find_attr(n.attrs, "value")) value = *v;
      }
    } else if (!aria.empty()) {
      e.label = aria;
    } else {
      e.label = text::collapse_whitespace(own_text);
      if (e.label.empty()) e.label = first_attr(n, {"title", "placeholder", "name", "alt"});
    }
    e.label = text::truncate_utf8(e.label, kMaxLabelBytes);
    e.value = text::truncate_utf8(value, kMaxLabelBytes);
  }

  std::string selected_option(const Node& select) {
    std::string first;
    std::string chosen;
    collect_options(select, first, chosen, 0);
    return chosen.empty() ? first : chosen;
  }

  void collect_options(const Node& n, std::string& first, std::string& chosen, std::size_t depth) {
    if (depth > kMaxDepth) return;
    for (auto c : n.children) {
      const Node& child = nodes_[c];
      if (child.is_text) continue;
      if (child.tag == "option") {
        std::string t;
        for (auto g : child.children) {
          if (nodes_[g].is_text) t += nodes_[g].text;
        }
        t = text::collapse_whitespace(t);
        if (first.empty()) first = t;
        if (chosen.empty() && find_attr(child.attrs, "selected")) chosen = t;
      } else {
        collect_options(child, first, chosen, depth + 1);
      }
    }
  }

  // Generic id/role elements take only their direct text as label; nested
  // markup keeps flowing into the enclosing sink.
  void emit_generic(const Node& n, std::string* sink, std::size_t depth) {
    std::size_t slot = reserve(n);
    std::string own_text;
    for (auto c : n.children) {
      if (nodes_[c].is_text) {
        own_text += nodes_[c].text;
      } else {
        walk(c, sink, depth + 1);
      }
    }
    auto& e = elements[slot];
    e.label = first_attr(n, {"aria-label"});
    if (e.label.empty()) e.label = text::collapse_whitespace(own_text);
    if (e.label.empty()) e.label = first_attr(n, {"title"});
    e.label = text::truncate_utf8(e.label, kMaxLabelBytes);
    e.value = text::truncate_utf8(first_attr(n, {"aria-valuetext"}), kMaxLabelBytes);
  }

  const std::vector<Node>& nodes_;
  std::string block_;
};

void assign_refs(std::vector<DistilledElement>& elements) {
  std::set<std::string> used;
  for (const auto& e : elements) {
    if (!e.ref.empty()) used.insert(e.ref);
  }
  std::set<std::string> taken;
  for (std::size_t i = 0; i < elements.size(); ++i) {
    auto& e = elements[i];
    std::string base = e.ref.empty() ? "e" + std::to_string(i + 1) : e.ref;
    std::string candidate = base;
    for (int k = 2; taken.count(candidate) || (e.ref.empty() && used.count(candidate)); ++k) {
      candidate = base + "~" + std::to_string(k);
    }
    e.ref = candidate;
    taken.insert(candidate);
  }
}

std::string join_visible(const std::vector<std::string>& blocks) {
  std::unordered_map<std::string_view, int> counts;
  for (const auto& b : blocks) ++counts[b];
  std::set<std::string_view> emitted;
  std::string out;
  for (const auto& b : blocks) {
    if (counts[b] >= 3 || !emitted.insert(b).second) continue;
    if (!out.empty()) out.push_back('\n');
    out += b;
  }
  return out;
}

}  // namespace

std::string_view to_string(ElementKind kind) {
  switch (kind) {
    case ElementKind::Link:
      return "link";
    case ElementKind::Button:
      return "button";
    case ElementKind::Textbox:
      return "textbox";
    case ElementKind::Widget:
      return "widget";
  }
  return "widget";
}

std::optional<ElementKind> parse_element_kind(std::string_view s) {
  if (s == "link") return ElementKind::Link;
  if (s == "button") return ElementKind::Button;
  if (s == "textbox") return ElementKind::Textbox;
  if (s == "widget") return ElementKind::Widget;
  return std::nullopt;
}

std::string decode_html_entities(std::string_view s) {
  static const std::map<std::string_view, std::string_view> kNamed{
      {"amp", "&"},       {"lt", "<"},        {"gt", ">"},         {"quot", "\""},
      {"apos", "'"},      {"nbsp", " "},      {"copy", "©"},  {"reg", "®"},
      {"mdash", "—"}, {"ndash", "–"}, {"hellip", "…"}, {"laquo", "«"},
      {"raquo", "»"}, {"middot", "·"},
  };
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '&') {
      out.push_back(s[i++]);
      continue;
    }
    auto semi = s.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 12) {
      out.push_back(s[i++]);
      continue;
    }
    auto body = s.substr(i + 1, semi - i - 1);
    if (body.size() >= 2 && body[0] == '#') {
      bool hex = body[1] == 'x' || body[1] == 'X';
      auto digits = body.substr(hex ? 2 : 1);
      bool ok = !digits.empty();
      char32_t cp = 0;
      for (char c : digits) {
        int d = -1;
        if (std::isdigit(static_cast<unsigned char>(c))) {
          d = c - '0';
        } else if (hex && std::isxdigit(static_cast<unsigned char>(c))) {
          d = std::tolower(static_cast<unsigned char>(c)) - 'a' + 10;
        }
        if (d < 0) {
          ok = false;
          break;
        }
        cp = cp * (hex ? 16 : 10) + static_cast<char32_t>(d);
        if (cp > 0x10FFFF) cp = 0x110000;
      }
      if (ok) {
        append_utf8(out, cp);
        i = semi + 1;
        continue;
      }
    } else if (auto it = kNamed.find(body); it != kNamed.end()) {
      out += it->second;
      i = semi + 1;
      continue;
    }
    out.push_back(s[i++]);
  }
  return out;
}

DistilledDom distill(std::string_view html) {
  DistilledDom dom;
  dom.source_bytes = html.size();
  if (html.empty()) return dom;

  auto nodes = TreeBuilder(html).build();
  Extractor ex(nodes);
  ex.run();

  dom.title = std::move(ex.title);
  dom.interactive_elements = std::move(ex.elements);
  assign_refs(dom.interactive_elements);
  dom.visible_text = join_visible(ex.blocks);

  std::size_t payload = dom.visible_text.size();
  for (const auto& e : dom.interactive_elements) payload += e.label.size() + e.value.size();
  dom.distilled_bytes = payload;
  return dom;
}

std::string format_observation(const DistilledDom& dom, std::string_view url,
                               std::string_view title) {
  std::string out;
  out += "URL: ";
  out += url;
  out += "\nTitle: ";
  out += title;
  out += '\n';
  if (!dom.interactive_elements.empty()) {
    out += "Interactive elements:\n";
    int n = 1;
    for (const auto& e : dom.interactive_elements) {
      out += "[" + std::to_string(n++) + "] " + e.ref + " (" + std::string(to_string(e.kind)) +
             ") \"" + e.label + "\"";
      if (!e.value.empty()) out += " value=\"" + e.value + "\"";
      out += '\n';
    }
  }
  if (!dom.visible_text.empty()) {
    out += "Page text:\n";
    out += dom.visible_text;
    out += '\n';
  }
  return out;
}

}  // namespace webrefine
