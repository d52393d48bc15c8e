#include "tkg/graph.hpp"

#include "tkg/error.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

namespace tkg {

namespace {

std::string make_id(char prefix, std::size_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c%06zu", prefix, n);
    return buf;
}

} // namespace

EntityId GraphStore::next_entity_id() const {
    std::size_t n = entities_.size() + 1;
    while (entities_.contains(make_id('V', n))) {
        ++n;
    }
    return make_id('V', n);
}

EdgeId GraphStore::next_edge_id() const {
    std::size_t n = edges_.size() + 1;
    while (edges_.contains(make_id('E', n))) {
        ++n;
    }
    return make_id('E', n);
}

void GraphStore::validate_property_map(const PropertyMap& properties, const std::string& owner) const {
    for (const auto& [key, value] : properties) {
        const bool exclusive = is_exclusive(key);
        const auto* set = std::get_if<CandidateSet>(&value);
        if (exclusive && !set) {
            throw ValidationError(owner + ": exclusive property '" + key + "' must hold a candidate set");
        }
        if (!exclusive && set) {
            throw ValidationError(owner + ": property '" + key + "' is not a registered exclusive relation");
        }
        if (!set) {
            continue;
        }
        if (set->empty()) {
            throw ValidationError(owner + ": exclusive property '" + key + "' has no candidates");
        }
        std::set<std::string> seen;
        for (const auto& c : *set) {
            if (!seen.insert(c.value).second) {
                throw ValidationError(owner + ": duplicate candidate '" + c.value + "' in '" + key + "'");
            }
            if (!(c.confidence >= 0.0 && c.confidence <= 1.0)) {
                throw ValidationError(owner + ": candidate confidence out of [0,1] in '" + key + "'");
            }
            if (!(c.source_weight > 0.0 && c.source_weight <= 1.0)) {
                throw ValidationError(owner + ": candidate source_weight out of (0,1] in '" + key + "'");
            }
            if (c.frequency_count < 1) {
                throw ValidationError(owner + ": candidate frequency_count must be >= 1 in '" + key + "'");
            }
        }
    }
}

EntityId GraphStore::upsert_entity(Entity entity) {
    if (entity.name.empty()) {
        throw ValidationError("entity name must be non-empty");
    }
    if (entity.id.empty()) {
        entity.id = next_entity_id();
    }
    validate_property_map(entity.properties, "entity " + entity.id);
    EntityId id = entity.id;
    entities_[id] = std::move(entity);
    ++revision_;
    return id;
}

void GraphStore::index_edge(const Edge& edge) {
    out_index_[edge.source][edge.relation].insert(edge.id);
    in_index_[edge.target][edge.relation].insert(edge.id);
}

void GraphStore::unindex_edge(const Edge& edge) {
    auto drop = [&](auto& index, const EntityId& node) {
        auto it = index.find(node);
        if (it == index.end()) {
            return;
        }
        auto rel = it->second.find(edge.relation);
        if (rel != it->second.end()) {
            rel->second.erase(edge.id);
            if (rel->second.empty()) {
                it->second.erase(rel);
            }
        }
        if (it->second.empty()) {
            index.erase(it);
        }
    };
    drop(out_index_, edge.source);
    drop(in_index_, edge.target);
}

EdgeId GraphStore::insert_edge(Edge edge) {
    if (!entities_.contains(edge.source)) {
        throw ReferentialError("edge source '" + edge.source + "' does not exist");
    }
    if (!entities_.contains(edge.target)) {
        throw ReferentialError("edge target '" + edge.target + "' does not exist");
    }
    if (edge.relation.empty()) {
        throw ValidationError("edge relation must be non-empty");
    }
    edge.interval.validate();
    if (is_exclusive(edge.relation)) {
        throw ValidationError("relation '" + edge.relation + "' is exclusive and is stored as an entity property");
    }
    for (const Edge& other : find_edges(edge.source, edge.relation, edge.target)) {
        if (other.interval == edge.interval) {
            throw ValidationError("duplicate edge (" + edge.source + ", " + edge.relation + ", " + edge.target +
                                  ") with identical interval");
        }
    }
    if (edge.id.empty()) {
        edge.id = next_edge_id();
    } else if (edges_.contains(edge.id)) {
        throw ValidationError("edge id '" + edge.id + "' already exists");
    }
    validate_property_map(edge.properties, "edge " + edge.id);
    EdgeId id = edge.id;
    index_edge(edge);
    edges_.emplace(id, std::move(edge));
    ++revision_;
    return id;
}

void GraphStore::register_schema(const RelationSchema& schema) {
    if (schema.relation.empty()) {
        throw ValidationError("schema relation must be non-empty");
    }
    const SchemaKey key{schema.subject_type, schema.relation, schema.object_type};
    if (auto it = schemas_.find(key); it != schemas_.end()) {
        if (it->second.exclusive != schema.exclusive) {
            throw ValidationError("exclusive flag of schema '" + schema.relation + "' is immutable");
        }
        return;
    }
    for (const auto& [_, other] : schemas_) {
        if (other.relation == schema.relation && other.exclusive != schema.exclusive) {
            throw ValidationError("relation '" + schema.relation + "' is already registered with exclusive=" +
                                  (other.exclusive ? "true" : "false"));
        }
    }
    schemas_.emplace(key, schema);
    ++revision_;
}

void GraphStore::remove_edge(const EdgeId& id) {
    auto it = edges_.find(id);
    if (it == edges_.end()) {
        throw ReferentialError("edge '" + id + "' does not exist");
    }
    unindex_edge(it->second);
    edges_.erase(it);
    ++revision_;
}

void GraphStore::remove_entity(const EntityId& id) {
    if (!entities_.contains(id)) {
        throw ReferentialError("entity '" + id + "' does not exist");
    }
    std::vector<EdgeId> incident = out_edge_ids(id);
    for (const EdgeId& e : in_edge_ids(id)) {
        incident.push_back(e);
    }
    std::sort(incident.begin(), incident.end());
    incident.erase(std::unique(incident.begin(), incident.end()), incident.end());
    for (const EdgeId& e : incident) {
        unindex_edge(edges_.at(e));
        edges_.erase(e);
    }
    entities_.erase(id);
    ++revision_;
}

const Entity& GraphStore::entity(const EntityId& id) const {
    auto it = entities_.find(id);
    if (it == entities_.end()) {
        throw ReferentialError("entity '" + id + "' does not exist");
    }
    return it->second;
}

const Edge& GraphStore::edge(const EdgeId& id) const {
    auto it = edges_.find(id);
    if (it == edges_.end()) {
        throw ReferentialError("edge '" + id + "' does not exist");
    }
    return it->second;
}

Entity& GraphStore::mutable_entity(const EntityId& id) {
    return const_cast<Entity&>(std::as_const(*this).entity(id));
}

Edge& GraphStore::mutable_edge(const EdgeId& id) {
    return const_cast<Edge&>(std::as_const(*this).edge(id));
}

std::vector<Edge> GraphStore::find_edges(const EntityId& source, const std::optional<std::string>& relation,
                                         const std::optional<EntityId>& target) const {
    if (!entities_.contains(source)) {
        throw ReferentialError("entity '" + source + "' does not exist");
    }
    std::vector<EdgeId> ids;
    if (auto it = out_index_.find(source); it != out_index_.end()) {
        for (const auto& [rel, edge_ids] : it->second) {
            if (relation && rel != *relation) {
                continue;
            }
            for (const EdgeId& e : edge_ids) {
                if (!target || edges_.at(e).target == *target) {
                    ids.push_back(e);
                }
            }
        }
    }
    std::sort(ids.begin(), ids.end());
    std::vector<Edge> result;
    result.reserve(ids.size());
    for (const EdgeId& e : ids) {
        result.push_back(edges_.at(e));
    }
    return result;
}

std::vector<RelationCount> GraphStore::out_relations(const EntityId& entity) const {
    if (!entities_.contains(entity)) {
        throw ReferentialError("entity '" + entity + "' does not exist");
    }
    std::vector<RelationCount> result;
    if (auto it = out_index_.find(entity); it != out_index_.end()) {
        for (const auto& [rel, edge_ids] : it->second) {
            result.push_back({rel, edge_ids.size()});
        }
    }
    return result;
}

std::vector<EdgeId> GraphStore::out_edge_ids(const EntityId& entity) const {
    std::vector<EdgeId> ids;
    if (auto it = out_index_.find(entity); it != out_index_.end()) {
        for (const auto& [_, edge_ids] : it->second) {
            ids.insert(ids.end(), edge_ids.begin(), edge_ids.end());
        }
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::vector<EdgeId> GraphStore::in_edge_ids(const EntityId& entity) const {
    std::vector<EdgeId> ids;
    if (auto it = in_index_.find(entity); it != in_index_.end()) {
        for (const auto& [_, edge_ids] : it->second) {
            ids.insert(ids.end(), edge_ids.begin(), edge_ids.end());
        }
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::optional<RelationSchema> GraphStore::find_schema(const std::string& subject_type, const std::string& relation,
                                                      const std::string& object_type) const {
    if (auto it = schemas_.find({subject_type, relation, object_type}); it != schemas_.end()) {
        return it->second;
    }
    return std::nullopt;
}

bool GraphStore::is_exclusive(const std::string& relation) const {
    return std::any_of(schemas_.begin(), schemas_.end(),
                       [&](const auto& kv) { return kv.second.relation == relation && kv.second.exclusive; });
}

void GraphStore::apply_batch(const std::function<void(GraphStore&)>& mutation) {
    GraphStore next = *this;
    mutation(next);
    next.revision_ = revision_ + 1;
    *this = std::move(next);
}

void GraphStore::audit() const {
    using Index = std::map<EntityId, std::map<std::string, std::set<EdgeId>>>;
    Index expected_out;
    Index expected_in;
    for (const auto& [id, e] : edges_) {
        if (id != e.id) {
            throw ValidationError("edge key '" + id + "' does not match its id '" + e.id + "'");
        }
        if (!entities_.contains(e.source) || !entities_.contains(e.target)) {
            throw ValidationError("edge '" + id + "' has a dangling endpoint");
        }
        expected_out[e.source][e.relation].insert(id);
        expected_in[e.target][e.relation].insert(id);
    }
    if (expected_out != out_index_) {
        throw ValidationError("out index does not mirror edges");
    }
    if (expected_in != in_index_) {
        throw ValidationError("in index does not mirror edges");
    }
    for (const auto& [id, ent] : entities_) {
        if (id != ent.id) {
            throw ValidationError("entity key '" + id + "' does not match its id '" + ent.id + "'");
        }
    }
}

} // namespace tkg
