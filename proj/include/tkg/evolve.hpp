#pragma once

// Graph evolution from extracted partial graphs: entity alignment,
// confidence-weighted merging of exclusive facts, relation synonym matching
// and the five edge update rules.

#include "json.hpp"
#include "tkg/embed.hpp"
#include "tkg/graph.hpp"
#include "tkg/oracle.hpp"

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tkg {

struct EvolutionConfig {
    double theta_entity = 0.5;
    double theta_relation = 0.5;
    double gamma = -0.05;  // per day; negative values decay stale candidates
    double delta = 0.7;
    std::size_t align_topk = 5;
    std::size_t context_cap = 16;
    bool fail_fast = false;

    void validate() const;
};

// C(o) = delta * f / (1 + exp(-gamma * dt_days)) + (1 - delta) * w
double candidate_confidence(double frequency_share, double elapsed_days, double source_weight, double gamma,
                            double delta);

struct Observation {
    std::string value;
    std::string context;
    Timestamp observed_at;
    double source_weight = 1.0;
};

// Adds one observation to an exclusive slot and re-scores every candidate:
// f = frequency_count / total count, dt = now - last_seen in days (0 when
// either is unknown), w = source_weight. Candidates are never removed.
CandidateSet merge_exclusive_property(CandidateSet slot, const Observation& observation,
                                      const EvolutionConfig& config, const Timestamp& now);
void rescore_candidates(CandidateSet& slot, const EvolutionConfig& config, const Timestamp& now);

struct Alignment {
    std::optional<EntityId> target;  // nullopt: insert as a new node
    double score = 0.0;

    bool aligned() const noexcept { return target.has_value(); }
};

Alignment align_entity(const Entity& candidate, const GraphStore& store, const EmbeddingIndex& entity_index,
                       const Encoder& encoder, const Oracle& oracle, const EvolutionConfig& config);

struct SynonymMatch {
    std::optional<RelationSchema> schema;
    double score = 0.0;

    bool matched() const noexcept { return schema.has_value(); }
};

// Best-cosine registered schema; matched iff score > theta_relation.
SynonymMatch match_relation_synonym(const RelationSchema& candidate, const GraphStore& store,
                                    const EmbeddingIndex& schema_index, const Encoder& encoder,
                                    const EvolutionConfig& config);

enum class MergeKind { Insert = 1, Skip = 2, Merge = 3, MapMerge = 4, MapInsert = 5 };

std::string to_string(MergeKind kind);

struct MergeAction {
    MergeKind kind = MergeKind::Insert;
    std::optional<std::string> mapped_relation;  // present iff MapMerge / MapInsert
    std::string reason;

    int rule_id() const noexcept { return static_cast<int>(kind); }
};

// An extracted fact whose endpoints are already aligned to store ids.
// Exclusive facts target the subject's property slot instead of an edge.
struct CandidateEdge {
    EntityId source;
    std::string relation;
    std::optional<EntityId> target;  // non-exclusive only
    std::string value;               // exclusive only
    TemporalInterval interval;
    bool exclusive = false;
    PropertyMap properties;
    std::string context;
};

// Key-wise containment: every key of `candidate` exists in `existing` with an
// equal plain value, or with each candidate value present in its set.
bool properties_subset(const PropertyMap& candidate, const PropertyMap& existing);

// Rule table, with R_existing the edges (source, target relation, target)
// carrying the candidate's interval:
//   not mapped: none -> Insert; found and subset -> Skip; found -> Merge
//   mapped (matched relation != extracted relation): found -> MapMerge; none -> MapInsert
// For exclusive facts "found" is the subject's slot for the relation, and
// "subset" means the same value was already observed under the same context.
MergeAction resolve_edge_action(const CandidateEdge& candidate, const std::optional<std::string>& matched_relation,
                                const GraphStore& store);

struct MergeReport {
    std::size_t entities_inserted = 0;
    std::size_t entities_aligned = 0;
    std::array<std::size_t, 5> edges{};  // indexed by rule id - 1
    std::size_t property_conflicts_recorded = 0;
    std::size_t documents_processed = 0;
    std::vector<std::string> document_errors;
    std::vector<nlohmann::json> audit;

    std::size_t count(MergeKind kind) const { return edges[static_cast<std::size_t>(kind) - 1]; }
    void absorb(const MergeReport& other);
    nlohmann::json summary() const;
};

// Embedding indexes kept in step with the store during evolution.
struct EvolutionIndexes {
    EmbeddingIndex entities;
    EmbeddingIndex schemas;

    static EvolutionIndexes build(const GraphStore& store, const Encoder& encoder);
};

struct SourceInfo {
    std::string document_id;
    Timestamp observed_at;
    double source_weight = 1.0;
};

// Applies one partial graph as a single batch: the store and indexes change
// only if every step succeeds, and the store revision advances by one.
MergeReport apply_partial_graph(const PartialGraph& partial, GraphStore& store, EvolutionIndexes& indexes,
                                const Encoder& encoder, const Oracle& oracle, const EvolutionConfig& config,
                                const SourceInfo& source, const Timestamp& now);

// Extract-then-apply per document, in order. Per-document failures are
// collected in the report unless config.fail_fast.
MergeReport update_from_corpus(const std::vector<Document>& documents, GraphStore& store, const Encoder& encoder,
                               const Oracle& oracle, const EvolutionConfig& config, const Timestamp& now);

// Corpus JSONL: {id, title, text, published_at, source_weight}.
std::vector<Document> load_corpus(std::istream& in);
std::vector<Document> load_corpus(const std::filesystem::path& path);
void save_corpus(const std::vector<Document>& documents, std::ostream& out);

} // namespace tkg
