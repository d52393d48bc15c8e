#include "tkg/text.hpp"

#include <cctype>

namespace tkg {

namespace {

bool token_byte(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c >= 0x80;
}

} // namespace

std::string to_lower(std::string_view text) {
    std::string out(text);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') {
            c = static_cast<char>(c - 'A' + 'a');
        }
    }
    return out;
}

std::string trim(std::string_view text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = text.find_last_not_of(" \t\r\n");
    return std::string(text.substr(first, last - first + 1));
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (const char raw : to_lower(text)) {
        const auto c = static_cast<unsigned char>(raw);
        if (token_byte(c)) {
            current.push_back(raw);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

std::string normalize_answer(std::string_view text) {
    std::string lowered = to_lower(text);
    std::string collapsed;
    bool space = false;
    for (const char c : lowered) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            space = !collapsed.empty();
            continue;
        }
        if (space) {
            collapsed.push_back(' ');
            space = false;
        }
        collapsed.push_back(c);
    }
    for (std::string_view article : {"the ", "a ", "an "}) {
        if (collapsed.size() > article.size() && collapsed.starts_with(article)) {
            return collapsed.substr(article.size());
        }
    }
    return collapsed;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) {
            out += sep;
        }
        out += parts[i];
    }
    return out;
}

} // namespace tkg
