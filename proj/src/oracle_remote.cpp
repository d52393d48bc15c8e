#include "tkg/error.hpp"
#include "tkg/oracle.hpp"
#include "tkg/prompts.hpp"
#include "tkg/text.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <thread>

namespace tkg {

using nlohmann::json;

namespace {

class InFlightGuard {
public:
    explicit InFlightGuard(std::counting_semaphore<1024>& sem) : sem_(sem) { sem_.acquire(); }
    ~InFlightGuard() { sem_.release(); }
    InFlightGuard(const InFlightGuard&) = delete;
    InFlightGuard& operator=(const InFlightGuard&) = delete;

private:
    std::counting_semaphore<1024>& sem_;
};

double clamp_unit(double value, const std::string& what) {
    if (!(value >= 0.0 && value <= 1.0)) {
        spdlog::warn("remote oracle: {} value {} clamped to [0,1]", what, value);
        return std::isnan(value) ? 0.0 : std::clamp(value, 0.0, 1.0);
    }
    return value;
}

std::string query_time_label(const Timestamp& t) {
    return t.known() ? t.iso8601() : "unknown";
}

std::string route_label(const std::vector<std::string>& route) {
    return json(route).dump();
}

// Rescales when the sum drifts outside 1 +/- 0.05.
void renormalize_if_needed(std::map<std::string, double>& scores) {
    double sum = 0.0;
    for (const auto& [_, v] : scores) {
        sum += v;
    }
    if (sum > 0.0 && std::abs(sum - 1.0) > 0.05) {
        spdlog::warn("remote oracle: scores sum to {}, renormalizing", sum);
        for (auto& [_, v] : scores) {
            v /= sum;
        }
    }
}

const json& first_present(const json& j, std::initializer_list<const char*> keys) {
    for (const char* k : keys) {
        if (j.contains(k)) {
            return j.at(k);
        }
    }
    throw OracleFormatError("response lacks field '" + std::string(*keys.begin()) + "'");
}

} // namespace

std::optional<std::string> extract_balanced_block(const std::string& text, char open) {
    const char close = open == '{' ? '}' : ']';
    const auto start = text.find(open);
    if (start == std::string::npos) {
        return std::nullopt;
    }
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{' || c == '[') {
            ++depth;
        } else if (c == '}' || c == ']') {
            if (--depth == 0) {
                return c == close ? std::optional<std::string>(text.substr(start, i - start + 1)) : std::nullopt;
            }
        }
    }
    return std::nullopt;
}

RemoteOracle::RemoteOracle(OracleConfig config, HttpPost post, Sleeper sleep)
    : config_(std::move(config)),
      post_(post ? std::move(post) : default_http_post(config_.timeout_seconds)),
      sleep_(sleep ? std::move(sleep) : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
      in_flight_(config_.max_in_flight) {
    config_.validate();
    if (config_.backend != OracleConfig::Backend::remote || config_.endpoint_url.empty() ||
        config_.model_name.empty()) {
        throw ConfigError("remote oracle requires backend=remote, endpoint_url and model_name");
    }
}

std::string RemoteOracle::complete(const std::string& prompt) const {
    HttpHeaders headers;
    if (!config_.api_key_env.empty()) {
        if (const char* key = std::getenv(config_.api_key_env.c_str())) {
            headers.emplace_back("Authorization", std::string("Bearer ") + key);
        }
    }
    const json request{{"model", config_.model_name},
                       {"temperature", config_.temperature},
                       {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}};
    std::string body;
    {
        InFlightGuard guard(in_flight_);
        body = post_(config_.endpoint_url + "/chat/completions", request.dump(), headers);
    }
    try {
        return json::parse(body).at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw OracleFormatError(std::string("malformed chat-completions envelope: ") + e.what());
    }
}

template <typename T>
T RemoteOracle::call(const std::string& prompt, char open, const std::function<T(const json&)>& parse) const {
    std::string last_error;
    bool last_was_transport = false;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        try {
            const std::string content = complete(prompt);
            const auto block = extract_balanced_block(content, open);
            if (!block) {
                throw OracleFormatError("no JSON block in response");
            }
            return parse(json::parse(*block));
        } catch (const TransportError& e) {
            last_error = e.what();
            last_was_transport = true;
        } catch (const OracleFormatError& e) {
            last_error = e.what();
            last_was_transport = false;
        } catch (const json::exception& e) {
            last_error = e.what();
            last_was_transport = false;
        }
        spdlog::warn("remote oracle attempt {} failed: {}", attempt + 1, last_error);
        if (attempt < config_.max_retries) {
            sleep_(std::chrono::milliseconds(1000LL << attempt));
        }
    }
    if (last_was_transport) {
        throw TransportError(last_error);
    }
    throw OracleFormatError("unusable response after " + std::to_string(config_.max_retries + 1) +
                            " attempts: " + last_error);
}

RoutePlan RemoteOracle::plan_routes(const std::string& question, const Timestamp& query_time,
                                    std::size_t n_routes) const {
    if (trim(question).empty()) {
        throw ValidationError("question must be non-empty");
    }
    const std::string prompt = prompts::fill(prompts::kRoutePlanning, {{"{domain}", config_.domain_label},
                                                                        {"{route}", std::to_string(n_routes)},
                                                                        {"<query>", question},
                                                                        {"<query time>", query_time_label(query_time)}});
    return call<RoutePlan>(prompt, '{', [n_routes](const json& j) {
        RoutePlan plan;
        plan.reason = j.value("reason", "");
        for (const auto& route : j.at("routes")) {
            std::vector<std::string> subgoals = route.get<std::vector<std::string>>();
            if (subgoals.empty()) {
                throw OracleFormatError("route planner returned an empty route");
            }
            plan.routes.push_back(std::move(subgoals));
        }
        if (plan.routes.empty()) {
            throw OracleFormatError("route planner returned no routes");
        }
        if (plan.routes.size() > n_routes) {
            plan.routes.resize(n_routes);
        }
        return plan;
    });
}

MentionAnalysis RemoteOracle::extract_mentions(const std::string& question, const Timestamp& query_time,
                                               const std::vector<std::string>& route) const {
    if (trim(question).empty()) {
        throw ValidationError("question must be non-empty");
    }
    const std::string prompt =
        prompts::fill(prompts::kGlobalInitialization, {{"{domain}", config_.domain_label},
                                                       {"<few-shot examples>", ""},
                                                       {"<query>", question},
                                                       {"<query time>", query_time_label(query_time)},
                                                       {"<route>", route_label(route)}});
    return call<MentionAnalysis>(prompt, '[', [](const json& j) {
        MentionAnalysis analysis;
        for (const auto& item : j) {
            std::string mention;
            std::string context;
            if (item.is_string()) {
                mention = item.get<std::string>();
                context = join(find_temporal_expressions(mention), " ");
            } else {
                mention = first_present(item, {"entity", "mention", "name"}).get<std::string>();
                context = item.value("time", join(find_temporal_expressions(mention), " "));
            }
            if (trim(mention).empty()) {
                continue;
            }
            analysis.mentions.push_back(mention);
            analysis.temporal_contexts.push_back(context);
        }
        return analysis;
    });
}

RelevanceScores RemoteOracle::score_entities(const std::string& question, const Timestamp& query_time,
                                             const std::vector<std::string>& route,
                                             const std::vector<std::string>& candidates) const {
    if (candidates.empty()) {
        throw ValidationError("score_entities requires at least one candidate");
    }
    const std::string prompt = prompts::fill(prompts::kRelevanceScoring, {{"{domain}", config_.domain_label},
                                                                          {"<few-shot examples>", ""},
                                                                          {"<query>", question},
                                                                          {"<query time>", query_time_label(query_time)},
                                                                          {"<route>", route_label(route)},
                                                                          {"<topk entities str>", join(candidates, "\n")}});
    const std::size_t n = candidates.size();
    return call<RelevanceScores>(prompt, '{', [n](const json& j) {
        RelevanceScores result;
        result.reason = j.value("reason", "");
        for (const auto& [key, value] : first_present(j, {"relevant_entities", "relevant entities"}).items()) {
            if (!key.starts_with("ent_")) {
                continue;
            }
            std::size_t pos = 0;
            try {
                pos = std::stoul(key.substr(4));
            } catch (const std::exception&) {
                continue;
            }
            if (pos < n) {
                result.scores[key] = clamp_unit(value.get<double>(), "entity score");
            }
        }
        renormalize_if_needed(result.scores);
        return result;
    });
}

std::map<std::string, double> RemoteOracle::score_relations(const std::string& question,
                                                            const std::vector<std::string>& subgoals,
                                                            const std::vector<RelationCount>& relations) const {
    if (relations.empty()) {
        return {};
    }
    json listing = json::object();
    for (const auto& r : relations) {
        listing[r.relation] = r.count;
    }
    const std::string prompt = prompts::fill(prompts::kRelationScoring, {{"{domain}", config_.domain_label},
                                                                         {"<query>", question},
                                                                         {"<route>", route_label(subgoals)},
                                                                         {"<relations>", listing.dump()}});
    return call<std::map<std::string, double>>(prompt, '{', [&relations](const json& j) {
        std::map<std::string, double> scores;
        const json& listed = first_present(j, {"relevant_relations", "relevant relations"});
        for (const auto& r : relations) {
            if (listed.contains(r.relation)) {
                scores[r.relation] = clamp_unit(listed.at(r.relation).get<double>(), "relation score");
            }
        }
        renormalize_if_needed(scores);
        return scores;
    });
}

double RemoteOracle::align_score(const std::string& candidate_rendering, const std::string& kg_rendering) const {
    if (trim(candidate_rendering).empty() || trim(kg_rendering).empty()) {
        throw ValidationError("align_score requires non-empty renderings");
    }
    const std::string prompt =
        prompts::fill(prompts::kAlignScoring, {{"<candidate>", candidate_rendering}, {"<stored>", kg_rendering}});
    return call<double>(prompt, '{',
                        [](const json& j) { return clamp_unit(j.at("score").get<double>(), "alignment score"); });
}

PartialGraph RemoteOracle::extract_partial_kg(const Document& document) const {
    if (trim(document.text).empty()) {
        throw ValidationError("document '" + document.id + "' is empty");
    }
    const std::string prompt = prompts::fill(
        prompts::kTripleExtraction, {{"{domain}", config_.domain_label},
                                     {"<title>", document.title},
                                     {"<published>", document.published_at.known() ? document.published_at.iso8601()
                                                                                   : "unknown"},
                                     {"<document>", document.text}});
    return call<PartialGraph>(prompt, '{', [](const json& j) {
        // Re-use the FACT parser so both backends share validation.
        std::string block;
        for (const auto& f : j.value("facts", json::array())) {
            auto field = [&](const char* key) {
                return f.contains(key) && !f.at(key).is_null() ? f.at(key).get<std::string>() : std::string();
            };
            const bool exclusive = f.value("exclusive", false);
            block += "FACT|" + field("subject_type") + "|" + field("subject") + "|" + field("relation") + "|" +
                     field("object_type") + "|" + field("object") + "|" + field("start") + "|" + field("end") + "|" +
                     (exclusive ? "true" : "false") + "\n";
        }
        PartialGraph graph = parse_fact_block(block);
        for (const auto& e : j.value("entities", json::array())) {
            const std::string type = e.value("type", "");
            const std::string name = e.value("name", "");
            const std::string desc = e.value("description", "");
            auto it = std::find_if(graph.entities.begin(), graph.entities.end(),
                                   [&](const Entity& x) { return x.type == type && x.name == name; });
            if (it != graph.entities.end()) {
                it->description = desc;
            } else if (!trim(name).empty()) {
                Entity added;
                added.type = type;
                added.name = name;
                added.description = desc;
                graph.entities.push_back(std::move(added));
            }
        }
        return graph;
    });
}

Judgement RemoteOracle::judge_answer(const std::string& question, const std::vector<std::string>& paths) const {
    if (paths.empty()) {
        return {};
    }
    const std::string prompt = prompts::fill(
        prompts::kAnswerJudging, {{"{domain}", config_.domain_label}, {"<query>", question}, {"<paths>", join(paths, "\n")}});
    return call<Judgement>(prompt, '{', [](const json& j) {
        Judgement verdict;
        verdict.answered = j.at("answered").get<bool>();
        verdict.answer = j.value("answer", "");
        return verdict;
    });
}

} // namespace tkg
