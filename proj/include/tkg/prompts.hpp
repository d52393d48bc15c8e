#pragma once

#include <map>
#include <string>
#include <string_view>

namespace tkg::prompts {

inline constexpr std::string_view kVersion = "1";

extern const std::string_view kRoutePlanning;
extern const std::string_view kGlobalInitialization;
extern const std::string_view kRelevanceScoring;
extern const std::string_view kRelationScoring;
extern const std::string_view kAlignScoring;
extern const std::string_view kTripleExtraction;
extern const std::string_view kAnswerJudging;

// Replaces every occurrence of each key (e.g. "{domain}", "<query>") with its value.
std::string fill(std::string_view tmpl, const std::map<std::string, std::string>& slots);

} // namespace tkg::prompts
