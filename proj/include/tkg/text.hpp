#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tkg {

// Lowercase ASCII letters; split on bytes outside [a-z0-9] (bytes >= 0x80
// stay inside tokens so UTF-8 words survive).
std::vector<std::string> tokenize(std::string_view text);

// Answer normalization: lowercase, trim, collapse whitespace, strip one
// leading article ("the", "a", "an").
std::string normalize_answer(std::string_view text);

std::string to_lower(std::string_view text);
std::string trim(std::string_view text);

// Joins with `sep`.
std::string join(const std::vector<std::string>& parts, std::string_view sep);

} // namespace tkg
