#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ragner::text {

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);
std::string_view trim(std::string&&) = delete;  // view would dangle
std::vector<std::string> split_whitespace(std::string_view s);
/// Splits on '\n', dropping a trailing '\r' from each line.
std::vector<std::string_view> split_lines(std::string_view s);
std::vector<std::string_view> split_lines(std::string&&) = delete;  // views would dangle
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Lowercase and collapse whitespace runs to single spaces (trimmed).
std::string normalize_entity(std::string_view s);

/// Number of Unicode code points in a UTF-8 string. Invalid bytes count as one.
std::size_t utf8_length(std::string_view s);

/// Case-insensitive (ASCII) substring test.
bool icontains(std::string_view haystack, std::string_view needle);

}  // namespace ragner::text
