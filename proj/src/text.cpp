#include "audit/text.hpp"

#include <cctype>

namespace audit::text {

std::string normalize_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = true;  // swallow leading whitespace
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            if (!in_space) out.push_back(' ');
            in_space = true;
        } else {
            out.push_back(static_cast<char>(c));
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

std::string casefold(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (size_t i = 0; i < s.size(); ++i) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        if (c >= 'A' && c <= 'Z') {
            out.push_back(static_cast<char>(c + 32));
        } else if (c == 0xC3 && i + 1 < s.size()) {
            // U+00C0..U+00DE map to lowercase by +0x20, except U+00D7 (×)
            unsigned char n = static_cast<unsigned char>(s[i + 1]);
            out.push_back(static_cast<char>(c));
            if (n >= 0x80 && n <= 0x9E && n != 0x97) {
                out.push_back(static_cast<char>(n + 0x20));
            } else {
                out.push_back(static_cast<char>(n));
            }
            ++i;
        } else {
            out.push_back(static_cast<char>(c));
        }
    }
    return out;
}

std::string normalize(std::string_view s) { return casefold(normalize_whitespace(s)); }

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> tokens;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && s[i] == ' ') ++i;
        size_t start = i;
        while (i < s.size() && s[i] != ' ') ++i;
        if (i > start) tokens.emplace_back(s.substr(start, i - start));
    }
    return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out.push_back(' ');
        out += t;
    }
    return out;
}

bool contains_substring(std::string_view haystack, std::string_view needle) {
    return haystack.find(needle) != std::string_view::npos;
}

std::string percent_encode(std::string_view s) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 0xF]);
        }
    }
    return out;
}

}  // namespace audit::text
