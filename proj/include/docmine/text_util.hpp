#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace docmine::text {

// UTF-8 helpers. Invalid sequences decode to U+FFFD.
std::u32string to_u32(std::string_view utf8);
std::string to_utf8(std::u32string_view cps);
void append_utf8(std::string& out, char32_t cp);
std::size_t codepoint_count(std::string_view utf8);

// Substring by code point offsets [start, end).
std::string substr_cp(std::string_view utf8, std::size_t start, std::size_t end);

bool is_space(char32_t cp);
bool is_alnum(char32_t cp);

// Trim and collapse every whitespace run to a single ASCII space.
std::string collapse_whitespace(std::string_view s);

// Unicode NFC composition.
std::string nfc(std::string_view s);

// Full Unicode case folding.
std::string case_fold(std::string_view s);

// Comparison key used wherever values vote or match by name:
// NFC, whitespace collapse, case fold.
std::string comparison_key(std::string_view s);

// Lower-cased alphanumeric tokens (search index / header matching).
std::vector<std::string> tokenize(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace docmine::text
