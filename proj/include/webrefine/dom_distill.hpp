#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace webrefine {

enum class ElementKind { Link, Button, Textbox, Widget };

std::string_view to_string(ElementKind kind);
std::optional<ElementKind> parse_element_kind(std::string_view text);

struct DistilledElement {
  /// The element's id attribute, else `e<ordinal>` in document order.
  std::string ref;
  ElementKind kind = ElementKind::Widget;
  std::string label;
  /// Current value for form controls (typed text, selected option); empty otherwise.
  std::string value;

  bool operator==(const DistilledElement&) const = default;
};

/// Compact, planner-facing view of one HTML page.
///
/// distilled_bytes counts the retained payload (visible text, labels and
/// values). Every retained byte originates from a distinct source byte, so
/// distilled_bytes <= source_bytes holds for any input.
struct DistilledDom {
  std::string title;
  std::vector<DistilledElement> interactive_elements;
  std::string visible_text;
  std::size_t source_bytes = 0;
  std::size_t distilled_bytes = 0;

  bool operator==(const DistilledDom&) const = default;
};

/// Lenient: malformed markup is recovered from, never rejected.
///
/// Anchors, buttons, inputs, selects, textareas and any element carrying an
/// explicit id or role become interactive elements. Script, style, noscript,
/// template and comment content is discarded. Visible text is split into
/// blocks; blocks whose text occurs three or more times are treated as
/// boilerplate and dropped, remaining duplicates are collapsed to their first
/// occurrence.
DistilledDom distill(std::string_view html);

/// Header (URL, title), numbered interactive-element list, then visible text.
/// Empty sections are omitted.
std::string format_observation(const DistilledDom& dom, std::string_view url,
                               std::string_view title);

/// Decodes the common named entities and numeric character references.
std::string decode_html_entities(std::string_view s);

}  // namespace webrefine
