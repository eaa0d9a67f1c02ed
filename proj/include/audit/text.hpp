#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace audit::text {

// Trims, collapses internal whitespace runs to single spaces.
std::string normalize_whitespace(std::string_view s);

// Lowercases ASCII letters and the UTF-8 Latin-1 supplement uppercase
// range (covers German umlauts). Other bytes pass through unchanged.
std::string casefold(std::string_view s);

// normalize_whitespace + casefold
std::string normalize(std::string_view s);

// Splits on whitespace; input is expected to be normalized already.
std::vector<std::string> tokenize(std::string_view s);

std::string join_tokens(const std::vector<std::string>& tokens);

bool contains_substring(std::string_view haystack, std::string_view needle);

// RFC 3986 percent-encoding of everything outside the unreserved set.
std::string percent_encode(std::string_view s);

}  // namespace audit::text
