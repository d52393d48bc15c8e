#include "tkg/evolve.hpp"

#include "tkg/error.hpp"
#include "tkg/json_io.hpp"
#include "tkg/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace tkg {

void EvolutionConfig::validate() const {
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!unit(theta_entity) || !unit(theta_relation)) {
        throw ConfigError("evolution thresholds must lie in [0,1]");
    }
    if (!unit(delta)) {
        throw ConfigError("evolution delta must lie in [0,1]");
    }
    if (!std::isfinite(gamma)) {
        throw ConfigError("evolution gamma must be finite");
    }
    if (align_topk < 1) {
        throw ConfigError("evolution align_topk must be >= 1");
    }
    if (context_cap < 1) {
        throw ConfigError("evolution context_cap must be >= 1");
    }
}

double candidate_confidence(double frequency_share, double elapsed_days, double source_weight, double gamma,
                            double delta) {
    return delta * frequency_share / (1.0 + std::exp(-gamma * elapsed_days)) + (1.0 - delta) * source_weight;
}

void rescore_candidates(CandidateSet& slot, const EvolutionConfig& config, const Timestamp& now) {
    std::uint64_t total = 0;
    for (const auto& c : slot) {
        total += c.frequency_count;
    }
    for (auto& c : slot) {
        const double f = total ? static_cast<double>(c.frequency_count) / static_cast<double>(total) : 0.0;
        double days = 0.0;
        if (now.known() && c.last_seen.known()) {
            days = static_cast<double>(now.seconds() - c.last_seen.seconds()) / 86400.0;
        }
        c.confidence = candidate_confidence(f, days, c.source_weight, config.gamma, config.delta);
    }
}

CandidateSet merge_exclusive_property(CandidateSet slot, const Observation& observation,
                                      const EvolutionConfig& config, const Timestamp& now) {
    config.validate();
    if (trim(observation.value).empty()) {
        throw ValidationError("observation value must be non-empty");
    }
    if (!(observation.source_weight > 0.0 && observation.source_weight <= 1.0)) {
        throw ValidationError("observation source_weight must lie in (0,1]");
    }
    auto it = std::find_if(slot.begin(), slot.end(),
                           [&](const PropertyCandidate& c) { return c.value == observation.value; });
    if (it == slot.end()) {
        PropertyCandidate fresh;
        fresh.value = observation.value;
        fresh.source_weight = observation.source_weight;
        slot.push_back(std::move(fresh));
        it = std::prev(slot.end());
    } else {
        // Credibility of a value is that of its most credible source.
        it->source_weight = std::max(it->source_weight, observation.source_weight);
    }
    it->frequency_count += 1;
    if (!it->last_seen.known() || (observation.observed_at.known() && observation.observed_at > it->last_seen)) {
        it->last_seen = observation.observed_at;
    }
    it->context = observation.context;
    it->contexts.push_back(observation.context);
    if (it->contexts.size() > config.context_cap) {
        it->contexts.erase(it->contexts.begin(),
                           it->contexts.begin() + static_cast<std::ptrdiff_t>(it->contexts.size() - config.context_cap));
    }
    rescore_candidates(slot, config, now);
    return slot;
}

namespace {

bool already_observed(const CandidateSet& slot, const std::string& value, const std::string& context) {
    return std::any_of(slot.begin(), slot.end(), [&](const PropertyCandidate& c) {
        return c.value == value && std::find(c.contexts.begin(), c.contexts.end(), context) != c.contexts.end();
    });
}

std::string observation_context(const SourceInfo& source, const TemporalInterval& interval) {
    std::string ctx = source.document_id;
    if (interval.start.known() || interval.end.known()) {
        ctx += " [" + interval.start.date_label() + ", " + interval.end.date_label() + "]";
    }
    return ctx;
}

// Merges `incoming` into `target`; returns the number of plain-value conflicts.
std::size_t merge_properties(PropertyMap& target, const PropertyMap& incoming, const GraphStore& store,
                             const EvolutionConfig& config, const SourceInfo& source, const Timestamp& now) {
    std::size_t conflicts = 0;
    for (const auto& [key, value] : incoming) {
        if (store.is_exclusive(key)) {
            std::vector<std::string> values;
            if (const auto* plain = std::get_if<std::string>(&value)) {
                values.push_back(*plain);
            } else {
                for (const auto& c : std::get<CandidateSet>(value)) {
                    values.push_back(c.value);
                }
            }
            CandidateSet slot;
            if (auto it = target.find(key); it != target.end()) {
                if (const auto* set = std::get_if<CandidateSet>(&it->second)) {
                    slot = *set;
                } else {
                    values.insert(values.begin(), std::get<std::string>(it->second));
                }
            }
            const std::string ctx = observation_context(source, {});
            for (const auto& v : values) {
                if (!already_observed(slot, v, ctx)) {
                    slot = merge_exclusive_property(std::move(slot), {v, ctx, source.observed_at, source.source_weight},
                                                    config, now);
                }
            }
            if (!slot.empty()) {
                target[key] = std::move(slot);
            }
            continue;
        }
        const std::string incoming_plain =
            std::holds_alternative<std::string>(value) ? std::get<std::string>(value)
                                                       : std::get<CandidateSet>(value).front().value;
        auto it = target.find(key);
        if (it == target.end()) {
            target.emplace(key, incoming_plain);
        } else if (!std::holds_alternative<std::string>(it->second) ||
                   std::get<std::string>(it->second) != incoming_plain) {
            it->second = incoming_plain;
            ++conflicts;
        }
    }
    return conflicts;
}

nlohmann::json interval_json(const TemporalInterval& interval) {
    return interval_to_json(interval);
}

} // namespace

Alignment align_entity(const Entity& candidate, const GraphStore& store, const EmbeddingIndex& entity_index,
                       const Encoder& encoder, const Oracle& oracle, const EvolutionConfig& config) {
    config.validate();
    const std::string rendering = entity_text(candidate.type, candidate.name, candidate.description);
    const Vector query = encode_entity(encoder, candidate.type, candidate.name, candidate.description);
    Alignment best;
    for (const auto& hit : topk(entity_index, query, config.align_topk)) {
        if (!store.has_entity(hit.key)) {
            continue;
        }
        const Entity& stored = store.entity(hit.key);
        const double score =
            oracle.align_score(rendering, entity_text(stored.type, stored.name, stored.description));
        if (!best.target || score > best.score) {
            best.target = hit.key;
            best.score = score;
        }
    }
    if (!best.target || best.score < config.theta_entity) {
        return {std::nullopt, best.score};
    }
    return best;
}

SynonymMatch match_relation_synonym(const RelationSchema& candidate, const GraphStore& store,
                                    const EmbeddingIndex& schema_index, const Encoder& encoder,
                                    const EvolutionConfig& config) {
    config.validate();
    const Vector query = encode_schema(encoder, candidate.subject_type, candidate.relation, candidate.object_type);
    const auto hits = topk(schema_index, query, 1);
    if (hits.empty()) {
        return {};
    }
    for (const auto& [_, schema] : store.schemas()) {
        if (schema_key(schema) == hits.front().key) {
            if (hits.front().score > config.theta_relation) {
                return {schema, hits.front().score};
            }
            return {std::nullopt, hits.front().score};
        }
    }
    return {std::nullopt, hits.front().score};
}

std::string to_string(MergeKind kind) {
    switch (kind) {
    case MergeKind::Insert:
        return "Insert";
    case MergeKind::Skip:
        return "Skip";
    case MergeKind::Merge:
        return "Merge";
    case MergeKind::MapMerge:
        return "MapMerge";
    case MergeKind::MapInsert:
        return "MapInsert";
    }
    return "Unknown";
}

bool properties_subset(const PropertyMap& candidate, const PropertyMap& existing) {
    auto values_of = [](const PropertyValue& v) {
        std::set<std::string> out;
        if (const auto* plain = std::get_if<std::string>(&v)) {
            out.insert(*plain);
        } else {
            for (const auto& c : std::get<CandidateSet>(v)) {
                out.insert(c.value);
            }
        }
        return out;
    };
    for (const auto& [key, value] : candidate) {
        auto it = existing.find(key);
        if (it == existing.end()) {
            return false;
        }
        const auto have = values_of(it->second);
        for (const auto& v : values_of(value)) {
            if (!have.contains(v)) {
                return false;
            }
        }
    }
    return true;
}

MergeAction resolve_edge_action(const CandidateEdge& candidate, const std::optional<std::string>& matched_relation,
                                const GraphStore& store) {
    if (!store.has_entity(candidate.source)) {
        throw PreconditionError("candidate source '" + candidate.source + "' is not aligned to a stored entity");
    }
    if (!candidate.exclusive && (!candidate.target || !store.has_entity(*candidate.target))) {
        throw PreconditionError("candidate target is not aligned to a stored entity");
    }
    const std::string relation = matched_relation.value_or(candidate.relation);
    const bool mapped = matched_relation && *matched_relation != candidate.relation;

    bool found = false;
    bool subset = false;
    if (candidate.exclusive) {
        const auto& props = store.entity(candidate.source).properties;
        if (auto it = props.find(relation); it != props.end()) {
            found = true;
            if (const auto* set = std::get_if<CandidateSet>(&it->second)) {
                subset = already_observed(*set, candidate.value, candidate.context);
            }
        }
    } else {
        for (const Edge& e : store.find_edges(candidate.source, relation, candidate.target)) {
            if (e.interval == candidate.interval) {
                found = true;
                subset = properties_subset(candidate.properties, e.properties);
                break;
            }
        }
    }

    if (mapped) {
        if (found) {
            return {MergeKind::MapMerge, relation, "synonym '" + relation + "' already links the pair; merge"};
        }
        return {MergeKind::MapInsert, relation, "synonym '" + relation + "' has no such fact yet; insert"};
    }
    if (!found) {
        return {MergeKind::Insert, std::nullopt, "no matching relation between the pair"};
    }
    if (subset) {
        return {MergeKind::Skip, std::nullopt, "same fact exists and carries no new information"};
    }
    return {MergeKind::Merge, std::nullopt, "same fact exists; merging new information"};
}

void MergeReport::absorb(const MergeReport& other) {
    entities_inserted += other.entities_inserted;
    entities_aligned += other.entities_aligned;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        edges[i] += other.edges[i];
    }
    property_conflicts_recorded += other.property_conflicts_recorded;
    documents_processed += other.documents_processed;
    document_errors.insert(document_errors.end(), other.document_errors.begin(), other.document_errors.end());
    audit.insert(audit.end(), other.audit.begin(), other.audit.end());
}

nlohmann::json MergeReport::summary() const {
    nlohmann::json edge_counts = nlohmann::json::object();
    for (MergeKind k : {MergeKind::Insert, MergeKind::Skip, MergeKind::Merge, MergeKind::MapMerge, MergeKind::MapInsert}) {
        edge_counts[to_string(k)] = count(k);
    }
    return {{"entities_inserted", entities_inserted},
            {"entities_aligned", entities_aligned},
            {"edges", edge_counts},
            {"property_conflicts_recorded", property_conflicts_recorded},
            {"documents_processed", documents_processed},
            {"document_errors", document_errors}};
}

EvolutionIndexes EvolutionIndexes::build(const GraphStore& store, const Encoder& encoder) {
    return {build_entity_index(store, encoder), build_schema_index(store, encoder)};
}

MergeReport apply_partial_graph(const PartialGraph& partial, GraphStore& store, EvolutionIndexes& indexes,
                                const Encoder& encoder, const Oracle& oracle, const EvolutionConfig& config,
                                const SourceInfo& source, const Timestamp& now) {
    config.validate();
    MergeReport report;
    EvolutionIndexes next_indexes = indexes;

    store.apply_batch([&](GraphStore& g) {
        auto index_entity = [&](const Entity& e) {
            std::string text = entity_text(e.type, e.name, e.description);
            Vector vector = encoder.encode(text);
            next_indexes.entities.set(e.id, std::move(vector), std::move(text));
        };
        auto register_schema = [&](const RelationSchema& s) {
            if (!g.find_schema(s.subject_type, s.relation, s.object_type)) {
                g.register_schema(s);
                next_indexes.schemas.set(schema_key(s), encode_schema(encoder, s.subject_type, s.relation, s.object_type),
                                         schema_text(s.subject_type, s.relation, s.object_type));
            }
        };
        auto resolve_entity = [&](const Entity& candidate) -> EntityId {
            const Alignment a = align_entity(candidate, g, next_indexes.entities, encoder, oracle, config);
            EntityId id;
            if (a.aligned()) {
                id = *a.target;
                Entity& stored = g.mutable_entity(id);
                if (stored.description.empty() && !candidate.description.empty()) {
                    stored.description = candidate.description;
                    ++stored.embedding_version;
                    index_entity(stored);
                }
                ++report.entities_aligned;
                report.audit.push_back({{"stage", "entity"},
                                        {"document", source.document_id},
                                        {"outcome", "aligned"},
                                        {"candidate", candidate.name},
                                        {"entity", id},
                                        {"score", a.score}});
            } else {
                Entity fresh;
                fresh.type = candidate.type;
                fresh.name = candidate.name;
                fresh.description = candidate.description;
                id = g.upsert_entity(std::move(fresh));
                index_entity(g.entity(id));
                ++report.entities_inserted;
                report.audit.push_back({{"stage", "entity"},
                                        {"document", source.document_id},
                                        {"outcome", "inserted"},
                                        {"candidate", candidate.name},
                                        {"entity", id},
                                        {"score", a.score}});
            }
            if (!candidate.properties.empty()) {
                Entity& stored = g.mutable_entity(id);
                PropertyMap merged = stored.properties;
                report.property_conflicts_recorded +=
                    merge_properties(merged, candidate.properties, g, config, source, now);
                stored.properties = std::move(merged);
            }
            return id;
        };

        std::vector<EntityId> ids;
        ids.reserve(partial.entities.size());
        for (const Entity& candidate : partial.entities) {
            ids.push_back(resolve_entity(candidate));
        }

        for (const ExtractedFact& fact : partial.edges) {
            if (fact.subject >= ids.size()) {
                throw ValidationError("extracted fact references a missing subject");
            }
            const std::string& subject_type = partial.entities[fact.subject].type;
            const RelationSchema candidate_schema{subject_type, fact.relation, fact.object_type, fact.exclusive};
            const SynonymMatch match = match_relation_synonym(candidate_schema, g, next_indexes.schemas, encoder, config);

            std::optional<std::string> matched_relation;
            bool exclusive = fact.exclusive;
            if (match.matched()) {
                matched_relation = match.schema->relation;
                exclusive = g.is_exclusive(*matched_relation);
                register_schema({subject_type, *matched_relation, fact.object_type, exclusive});
            } else {
                for (const auto& [_, s] : g.schemas()) {
                    if (s.relation == fact.relation) {
                        exclusive = s.exclusive;
                        break;
                    }
                }
                register_schema({subject_type, fact.relation, fact.object_type, exclusive});
            }

            CandidateEdge candidate;
            candidate.source = ids[fact.subject];
            candidate.relation = fact.relation;
            candidate.interval = fact.interval;
            candidate.exclusive = exclusive;
            candidate.context = observation_context(source, fact.interval);
            if (exclusive) {
                candidate.value = fact.object;
            } else if (fact.object_entity) {
                candidate.target = ids.at(*fact.object_entity);
            } else {
                Entity object;
                object.type = fact.object_type;
                object.name = fact.object;
                candidate.target = resolve_entity(object);
            }
            const std::string relation = matched_relation.value_or(fact.relation);
            PropertyMap edge_properties;
            report.property_conflicts_recorded +=
                merge_properties(edge_properties, fact.properties, g, config, source, now);
            candidate.properties = edge_properties;

            const MergeAction action = resolve_edge_action(candidate, matched_relation, g);
            switch (action.kind) {
            case MergeKind::Insert:
            case MergeKind::MapInsert:
            case MergeKind::Merge:
            case MergeKind::MapMerge:
                if (exclusive) {
                    Entity& subject = g.mutable_entity(candidate.source);
                    CandidateSet slot;
                    if (auto it = subject.properties.find(relation); it != subject.properties.end()) {
                        slot = std::get<CandidateSet>(it->second);
                    }
                    if (!already_observed(slot, candidate.value, candidate.context)) {
                        slot = merge_exclusive_property(
                            std::move(slot), {candidate.value, candidate.context, source.observed_at, source.source_weight},
                            config, now);
                    }
                    subject.properties[relation] = std::move(slot);
                } else if (action.kind == MergeKind::Insert || action.kind == MergeKind::MapInsert) {
                    Edge edge;
                    edge.source = candidate.source;
                    edge.relation = relation;
                    edge.target = *candidate.target;
                    edge.interval = candidate.interval;
                    edge.properties = candidate.properties;
                    g.insert_edge(std::move(edge));
                } else {
                    for (const Edge& e : g.find_edges(candidate.source, relation, candidate.target)) {
                        if (e.interval == candidate.interval) {
                            Edge& stored = g.mutable_edge(e.id);
                            report.property_conflicts_recorded +=
                                merge_properties(stored.properties, fact.properties, g, config, source, now);
                            break;
                        }
                    }
                }
                break;
            case MergeKind::Skip:
                break;
            }
            ++report.edges[static_cast<std::size_t>(action.rule_id()) - 1];
            report.audit.push_back({{"stage", "edge"},
                                    {"document", source.document_id},
                                    {"rule", action.rule_id()},
                                    {"action", to_string(action.kind)},
                                    {"subject", candidate.source},
                                    {"relation", fact.relation},
                                    {"mapped_relation", action.mapped_relation ? nlohmann::json(*action.mapped_relation)
                                                                               : nlohmann::json(nullptr)},
                                    {"synonym_score", match.score},
                                    {"object", exclusive ? nlohmann::json(candidate.value)
                                                         : nlohmann::json(*candidate.target)},
                                    {"exclusive", exclusive},
                                    {"interval", interval_json(candidate.interval)},
                                    {"reason", action.reason}});
        }
    });
    indexes = std::move(next_indexes);
    return report;
}

MergeReport update_from_corpus(const std::vector<Document>& documents, GraphStore& store, const Encoder& encoder,
                               const Oracle& oracle, const EvolutionConfig& config, const Timestamp& now) {
    config.validate();
    MergeReport total;
    EvolutionIndexes indexes = EvolutionIndexes::build(store, encoder);
    for (const Document& doc : documents) {
        try {
            const PartialGraph partial = oracle.extract_partial_kg(doc);
            const SourceInfo source{doc.id, doc.published_at.known() ? doc.published_at : now, doc.source_weight};
            MergeReport report = apply_partial_graph(partial, store, indexes, encoder, oracle, config, source, now);
            report.documents_processed = 1;
            total.absorb(report);
        } catch (const Error& e) {
            if (config.fail_fast) {
                throw;
            }
            total.document_errors.push_back(doc.id + ": " + e.what());
        }
    }
    return total;
}

std::vector<Document> load_corpus(std::istream& in) {
    std::vector<Document> documents;
    std::set<std::string> ids;
    for_each_jsonl(in, [&](const json& record, std::size_t line) {
        Document doc;
        doc.id = record.at("id").get<std::string>();
        doc.title = record.value("title", "");
        doc.text = record.at("text").get<std::string>();
        doc.published_at = timestamp_from_json(record.value("published_at", json(nullptr)));
        doc.source_weight = record.value("source_weight", 1.0);
        if (!(doc.source_weight > 0.0 && doc.source_weight <= 1.0)) {
            throw ParseError("source_weight must lie in (0,1]", line);
        }
        if (!ids.insert(doc.id).second) {
            throw ParseError("duplicate document id '" + doc.id + "'", line);
        }
        documents.push_back(std::move(doc));
    });
    return documents;
}

std::vector<Document> load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open corpus " + path.string());
    }
    return load_corpus(in);
}

void save_corpus(const std::vector<Document>& documents, std::ostream& out) {
    for (const Document& d : documents) {
        out << json{{"id", d.id},
                    {"title", d.title},
                    {"text", d.text},
                    {"published_at", timestamp_to_json(d.published_at)},
                    {"source_weight", d.source_weight}}
                   .dump()
            << '\n';
    }
}

} // namespace tkg
