#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace webrefine::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool contains_icase(std::string_view haystack, std::string_view needle);
bool starts_with_icase(std::string_view s, std::string_view prefix);
/// Splits on '\n'; a CR before the newline is dropped.
std::vector<std::string_view> split_lines(std::string_view s);

/// Collapses runs of ASCII whitespace to one space and trims the ends.
std::string collapse_whitespace(std::string_view s);

/// Longest prefix of at most max_bytes that does not split a UTF-8 sequence.
std::string truncate_utf8(std::string_view s, std::size_t max_bytes);

bool is_valid_utf8(std::string_view s);

/// Replaces every occurrence of `from` with `to`.
std::string replace_all(std::string_view s, std::string_view from, std::string_view to);

}  // namespace webrefine::text
