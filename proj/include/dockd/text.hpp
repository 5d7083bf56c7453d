#pragma once

#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared across modules. All functions are ASCII-aware
// only; non-ASCII bytes pass through untouched.
namespace dockd::text {

std::string_view trim_view(std::string_view s);
std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Lowercase + trim, the normalization used for label and field comparison.
std::string normalize_key(std::string_view s);

/// Splits on '\n', dropping a trailing '\r' from each line.
std::vector<std::string_view> split_lines(std::string_view s);

/// Splits on runs of ASCII whitespace; never yields empty tokens.
std::vector<std::string_view> split_words(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool starts_with_ci(std::string_view s, std::string_view prefix);

/// Decodes UTF-8 into code points. Invalid bytes decode to U+FFFD one byte at
/// a time so the function is total over arbitrary input.
std::u32string utf8_decode(std::string_view s);

/// Number of code points in a UTF-8 string.
std::size_t utf8_length(std::string_view s);

}  // namespace dockd::text
