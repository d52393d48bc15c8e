#pragma once

// Temporal property graph: entities, interval-qualified edges, exclusive
// property candidate sets and the relation-schema registry.

#include "tkg/time.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace tkg {

using EntityId = std::string;
using EdgeId = std::string;

struct PropertyCandidate {
    std::string value;
    double confidence = 0.0;
    // Context of the most recent observation.
    std::string context;
    // Bounded history of observation contexts, oldest first.
    std::vector<std::string> contexts;
    std::uint64_t frequency_count = 0;
    Timestamp last_seen;
    double source_weight = 1.0;

    friend bool operator==(const PropertyCandidate&, const PropertyCandidate&) = default;
};

using CandidateSet = std::vector<PropertyCandidate>;
using PropertyValue = std::variant<std::string, CandidateSet>;
using PropertyMap = std::map<std::string, PropertyValue>;

struct Entity {
    EntityId id;
    std::string type;
    std::string name;
    std::string description;
    PropertyMap properties;
    std::int64_t embedding_version = 0;

    friend bool operator==(const Entity&, const Entity&) = default;
};

struct Edge {
    EdgeId id;
    EntityId source;
    std::string relation;
    EntityId target;
    TemporalInterval interval;
    PropertyMap properties;

    friend bool operator==(const Edge&, const Edge&) = default;
};

struct RelationSchema {
    std::string subject_type;
    std::string relation;
    std::string object_type;
    bool exclusive = false;

    friend bool operator==(const RelationSchema&, const RelationSchema&) = default;
};

struct RelationCount {
    std::string relation;
    std::size_t count = 0;

    friend bool operator==(const RelationCount&, const RelationCount&) = default;
};

class GraphStore {
public:
    using SchemaKey = std::tuple<std::string, std::string, std::string>;

    // Replaces a same-id entity wholesale. Assigns an id when entity.id is empty.
    EntityId upsert_entity(Entity entity);
    EdgeId insert_edge(Edge edge);
    void register_schema(const RelationSchema& schema);

    // Test-only removal; removing an entity drops its incident edges.
    void remove_edge(const EdgeId& id);
    void remove_entity(const EntityId& id);

    const Entity& entity(const EntityId& id) const;
    const Edge& edge(const EdgeId& id) const;
    Entity& mutable_entity(const EntityId& id);
    Edge& mutable_edge(const EdgeId& id);
    bool has_entity(const EntityId& id) const { return entities_.contains(id); }
    bool has_edge(const EdgeId& id) const { return edges_.contains(id); }

    std::vector<Edge> find_edges(const EntityId& source, const std::optional<std::string>& relation = std::nullopt,
                                 const std::optional<EntityId>& target = std::nullopt) const;
    // Sorted by relation name.
    std::vector<RelationCount> out_relations(const EntityId& entity) const;
    std::vector<EdgeId> out_edge_ids(const EntityId& entity) const;
    std::vector<EdgeId> in_edge_ids(const EntityId& entity) const;

    const std::map<EntityId, Entity>& entities() const noexcept { return entities_; }
    const std::map<EdgeId, Edge>& edges() const noexcept { return edges_; }
    const std::map<SchemaKey, RelationSchema>& schemas() const noexcept { return schemas_; }
    std::optional<RelationSchema> find_schema(const std::string& subject_type, const std::string& relation,
                                              const std::string& object_type) const;
    // A relation name is exclusive when any registered schema using it is.
    bool is_exclusive(const std::string& relation) const;

    std::int64_t revision() const noexcept { return revision_; }
    void set_revision(std::int64_t revision) { revision_ = revision; }

    // Runs `mutation` against a copy and commits it, with revision + 1, only if
    // it returns normally. Readers holding the old store never see partial state.
    void apply_batch(const std::function<void(GraphStore&)>& mutation);

    // Throws ValidationError describing the first mismatch between the
    // adjacency indexes and the edge map.
    void audit() const;

    EntityId next_entity_id() const;
    EdgeId next_edge_id() const;

    friend bool operator==(const GraphStore& a, const GraphStore& b) {
        return a.entities_ == b.entities_ && a.edges_ == b.edges_ && a.schemas_ == b.schemas_ &&
               a.revision_ == b.revision_;
    }

private:
    void validate_property_map(const PropertyMap& properties, const std::string& owner) const;
    void index_edge(const Edge& edge);
    void unindex_edge(const Edge& edge);

    std::map<EntityId, Entity> entities_;
    std::map<EdgeId, Edge> edges_;
    std::map<EntityId, std::map<std::string, std::set<EdgeId>>> out_index_;
    std::map<EntityId, std::map<std::string, std::set<EdgeId>>> in_index_;
    std::map<SchemaKey, RelationSchema> schemas_;
    std::int64_t revision_ = 0;
};

} // namespace tkg
