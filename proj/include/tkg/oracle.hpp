#pragma once

// Judgment interface for every language-model-dependent step, with a
// deterministic embedding-backed backend and a remote chat-completions backend.

#include "json.hpp"
#include "tkg/embed.hpp"
#include "tkg/graph.hpp"
#include "tkg/http.hpp"

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

namespace tkg {

struct OracleConfig {
    enum class Backend { deterministic, remote };

    Backend backend = Backend::deterministic;
    std::string endpoint_url;
    std::string model_name;
    std::string api_key_env = "OPENAI_API_KEY";
    double temperature = 0.0;
    int max_retries = 3;
    std::string domain_label = "general";
    int max_in_flight = 4;
    int timeout_seconds = 60;

    void validate() const;
};

struct RoutePlan {
    std::string reason;
    std::vector<std::vector<std::string>> routes;
};

struct MentionAnalysis {
    std::vector<std::string> mentions;
    std::vector<std::string> temporal_contexts;  // "" = none

    friend bool operator==(const MentionAnalysis&, const MentionAnalysis&) = default;
};

struct RelevanceScores {
    std::string reason;
    std::map<std::string, double> scores;  // keyed "ent_<position>"
};

struct Judgement {
    bool answered = false;
    std::string answer;
};

struct Document {
    std::string id;
    std::string title;
    std::string text;
    Timestamp published_at;
    double source_weight = 1.0;
};

struct ExtractedFact {
    std::size_t subject = 0;                   // index into PartialGraph::entities
    std::string relation;
    std::string object_type;
    std::string object;                        // object name, or the value of an exclusive fact
    std::optional<std::size_t> object_entity;  // set for non-exclusive facts
    TemporalInterval interval;
    bool exclusive = false;
    PropertyMap properties;
};

struct PartialGraph {
    std::vector<Entity> entities;  // ids empty; unique by (type, name)
    std::vector<ExtractedFact> edges;

    bool empty() const noexcept { return entities.empty() && edges.empty(); }
};

class Oracle {
public:
    virtual ~Oracle() = default;

    virtual RoutePlan plan_routes(const std::string& question, const Timestamp& query_time,
                                  std::size_t n_routes) const = 0;
    virtual MentionAnalysis extract_mentions(const std::string& question, const Timestamp& query_time,
                                             const std::vector<std::string>& route) const = 0;
    virtual RelevanceScores score_entities(const std::string& question, const Timestamp& query_time,
                                           const std::vector<std::string>& route,
                                           const std::vector<std::string>& candidates) const = 0;
    virtual std::map<std::string, double> score_relations(const std::string& question,
                                                          const std::vector<std::string>& subgoals,
                                                          const std::vector<RelationCount>& relations) const = 0;
    virtual double align_score(const std::string& candidate_rendering, const std::string& kg_rendering) const = 0;
    virtual PartialGraph extract_partial_kg(const Document& document) const = 0;
    virtual Judgement judge_answer(const std::string& question, const std::vector<std::string>& paths) const = 0;
};

// Relevance-scoring entity format:
// ent_<i>: (<type>: <name>, desc: "<desc>", props: {key: [val (70%, ctx:"ctx")], ...})
std::string render_candidate(std::size_t position, const Entity& entity);

// 4-digit years (1000-2099), ISO dates and month-name dates, in text order.
std::vector<std::string> find_temporal_expressions(const std::string& text);

// Parses "FACT|subject_type|subject|relation|object_type|object|start|end|exclusive"
// lines (optional trailing key=value fields become edge properties). start/end
// accept ISO-8601 or one of "", "unknown", "null", "?" for Unknown.
PartialGraph parse_fact_block(const std::string& text);

// Verbalized paths handed to judge_answer end in " => <type>: <name>".
inline constexpr std::string_view kPathTerminalMarker = " => ";

class DeterministicOracle : public Oracle {
public:
    explicit DeterministicOracle(std::shared_ptr<const Encoder> encoder);

    RoutePlan plan_routes(const std::string& question, const Timestamp& query_time,
                          std::size_t n_routes) const override;
    MentionAnalysis extract_mentions(const std::string& question, const Timestamp& query_time,
                                     const std::vector<std::string>& route) const override;
    RelevanceScores score_entities(const std::string& question, const Timestamp& query_time,
                                   const std::vector<std::string>& route,
                                   const std::vector<std::string>& candidates) const override;
    std::map<std::string, double> score_relations(const std::string& question,
                                                  const std::vector<std::string>& subgoals,
                                                  const std::vector<RelationCount>& relations) const override;
    double align_score(const std::string& candidate_rendering, const std::string& kg_rendering) const override;
    PartialGraph extract_partial_kg(const Document& document) const override;
    // Answered iff a path ends at an entity whose type equals the word after
    // "which"/"what" ("person" for "who") and whose name is not in the question.
    Judgement judge_answer(const std::string& question, const std::vector<std::string>& paths) const override;

    const Encoder& encoder() const noexcept { return *encoder_; }

private:
    std::shared_ptr<const Encoder> encoder_;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

class RemoteOracle : public Oracle {
public:
    RemoteOracle(OracleConfig config, HttpPost post = {}, Sleeper sleep = {});

    RoutePlan plan_routes(const std::string& question, const Timestamp& query_time,
                          std::size_t n_routes) const override;
    MentionAnalysis extract_mentions(const std::string& question, const Timestamp& query_time,
                                     const std::vector<std::string>& route) const override;
    RelevanceScores score_entities(const std::string& question, const Timestamp& query_time,
                                   const std::vector<std::string>& route,
                                   const std::vector<std::string>& candidates) const override;
    std::map<std::string, double> score_relations(const std::string& question,
                                                  const std::vector<std::string>& subgoals,
                                                  const std::vector<RelationCount>& relations) const override;
    double align_score(const std::string& candidate_rendering, const std::string& kg_rendering) const override;
    PartialGraph extract_partial_kg(const Document& document) const override;
    Judgement judge_answer(const std::string& question, const std::vector<std::string>& paths) const override;

private:
    // Sends `prompt`, extracts the first balanced block opened by `open`
    // ('{' or '['), and hands the parsed JSON to `parse`. Format and transport
    // failures are retried max_retries times with 1s, 2s, 4s, ... backoff.
    template <typename T>
    T call(const std::string& prompt, char open, const std::function<T(const nlohmann::json&)>& parse) const;
    std::string complete(const std::string& prompt) const;

    OracleConfig config_;
    HttpPost post_;
    Sleeper sleep_;
    mutable std::counting_semaphore<1024> in_flight_;
};

// Returns the first balanced block starting at `open`, honoring JSON string
// escapes, or nullopt.
std::optional<std::string> extract_balanced_block(const std::string& text, char open);

std::unique_ptr<Oracle> make_oracle(const OracleConfig& config, std::shared_ptr<const Encoder> encoder);

} // namespace tkg
