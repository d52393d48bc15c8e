#pragma once

// Question answering over a temporal graph: route planning with a traversal
// cost model, anchor grounding, beam exploration, path scoring and
// confidence-weighted voting across routes.

#include "json.hpp"
#include "tkg/embed.hpp"
#include "tkg/graph.hpp"
#include "tkg/oracle.hpp"

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace tkg {

struct ReasonerConfig {
    std::size_t n_routes = 3;
    std::size_t k_candidates = 5;
    std::size_t k_anchors = 2;
    std::size_t beam_width = 5;
    std::size_t max_depth = 4;  // 0 is allowed: answers come from the anchors alone
    std::size_t default_hops = 3;
    std::size_t consensus_min = 2;
    double dedup_threshold = 0.95;
    std::size_t oracle_budget = 0;  // max oracle calls per question; 0 = unlimited

    void validate() const;
};

struct SubgoalEstimate {
    std::uint64_t b = 1;  // candidate relation types per step
    std::uint64_t n = 1;  // reachable entities per step
    std::uint64_t h = 1;  // hops

    friend bool operator==(const SubgoalEstimate&, const SubgoalEstimate&) = default;
};

struct Hop {
    std::string relation;
    double relation_score = 0.0;
    EntityId target;
    double triplet_score = 0.0;
    TemporalInterval interval;
    EdgeId edge;
};

struct ReasoningPath {
    EntityId anchor;
    double anchor_score = 0.0;
    std::vector<Hop> hops;
    double confidence = 0.0;

    const EntityId& terminal() const { return hops.empty() ? anchor : hops.back().target; }
};

struct Anchor {
    EntityId entity;
    double score = 0.0;
};

struct Answer {
    std::string value;
    double confidence_mass = 0.0;
    std::vector<ReasoningPath> supporting_paths;
    std::map<std::size_t, double> route_votes;  // route index -> mass contributed to `value`
    std::size_t routes_executed = 0;
    std::size_t oracle_calls = 0;
    std::vector<nlohmann::json> audit;
};

// Sum over subgoals of (b * n)^h.
double route_cost(const std::vector<std::string>& route, const std::vector<SubgoalEstimate>& estimates);

// Conf = s_init * prod(s_rel * s_triplet). Throws ValidationError when a
// factor lies outside [0,1].
double score_path(const ReasoningPath& path);

// "{source} {relation} {target} from {start} to {end}", dates as YYYY-MM-DD.
std::string verbalize_triplet(const std::string& source_name, const std::string& relation,
                              const std::string& target_name, const TemporalInterval& interval);

struct RouteChoice {
    std::size_t index = 0;  // position in the planner's output
    std::vector<std::string> subgoals;
    double cost = 0.0;
};

// Ascending cost with planner-order ties, near-duplicates (cosine of the
// joined subgoals above config.dedup_threshold) dropped in favour of the
// earlier survivor, truncated to n_routes.
std::vector<RouteChoice> select_routes(const RoutePlan& plan, const std::vector<std::vector<SubgoalEstimate>>& estimates,
                                       const Encoder& encoder, const ReasonerConfig& config);

using AnswerOf = std::function<std::string(const ReasoningPath&)>;

// Groups paths by normalized answer, sums confidences, and returns the group
// with the largest mass (ties: larger single-path confidence, then the
// lexicographically smaller answer). Throws NoAnswerError without paths.
Answer answer_by_voting(const std::vector<std::vector<ReasoningPath>>& paths_per_route, const AnswerOf& answer_of);

struct ExplorationResult {
    std::vector<ReasoningPath> paths;      // the candidates handed to voting
    std::vector<ReasoningPath> all_paths;  // every path retained at any depth, anchors included
    std::size_t depth_reached = 0;
    bool answered = false;
    std::string judged_answer;
};

// Wraps an oracle and counts calls; throws Error once the budget is spent.
class CountingOracle final : public Oracle {
public:
    CountingOracle(const Oracle& inner, std::size_t budget) : inner_(inner), budget_(budget) {}

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

    std::size_t calls() const noexcept { return calls_.load(); }

private:
    void tick() const;

    const Oracle& inner_;
    std::size_t budget_;
    mutable std::atomic<std::size_t> calls_{0};
};

// Read-only over the store; one instance may serve concurrent questions.
class Reasoner {
public:
    Reasoner(const GraphStore& store, const EmbeddingIndex& entity_index, const Encoder& encoder, const Oracle& oracle,
             ReasonerConfig config);

    SubgoalEstimate estimate_subgoal(const std::string& subgoal, const std::vector<EntityId>& anchors,
                                     const Timestamp& query_time) const;
    std::vector<Anchor> ground_query(const std::string& question, const Timestamp& query_time,
                                     const std::vector<std::string>& route) const;
    std::vector<ReasoningPath> explore_step(const std::vector<ReasoningPath>& frontier, const std::string& question,
                                            const std::vector<std::string>& subgoals) const;
    ExplorationResult explore_route(const std::vector<std::string>& route, const std::vector<Anchor>& anchors,
                                    const std::string& question, std::vector<nlohmann::json>* audit = nullptr) const;
    Answer answer(const std::string& question, const Timestamp& query_time) const;

    // Triplets joined by "; " and closed with " => <type>: <name>".
    std::string verbalize_path(const ReasoningPath& path) const;
    std::string answer_of(const ReasoningPath& path) const;

    const ReasonerConfig& config() const noexcept { return config_; }

private:
    SubgoalEstimate estimate_with(const Oracle& oracle, const std::string& subgoal,
                                  const std::vector<EntityId>& anchors, const Timestamp& query_time) const;
    std::vector<Anchor> ground_with(const Oracle& oracle, const std::string& question, const Timestamp& query_time,
                                    const std::vector<std::string>& route) const;
    std::vector<ReasoningPath> step_with(const Oracle& oracle, const std::vector<ReasoningPath>& frontier,
                                         const Vector& question_vector, const std::string& question,
                                         const std::vector<std::string>& subgoals,
                                         std::vector<nlohmann::json>* audit, std::size_t depth) const;
    ExplorationResult explore_with(const Oracle& oracle, const std::vector<std::string>& route,
                                   const std::vector<Anchor>& anchors, const std::string& question,
                                   std::vector<nlohmann::json>* audit) const;

    const GraphStore& store_;
    const EmbeddingIndex& index_;
    const Encoder& encoder_;
    const Oracle& oracle_;
    ReasonerConfig config_;
};

} // namespace tkg
