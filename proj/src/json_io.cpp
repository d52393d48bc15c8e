#include "tkg/json_io.hpp"

namespace tkg {

json timestamp_to_json(const Timestamp& t) {
    return t.known() ? json(t.iso8601()) : json(nullptr);
}

Timestamp timestamp_from_json(const json& j) {
    if (j.is_null()) {
        return Timestamp::unknown();
    }
    return Timestamp::parse_iso8601(j.get<std::string>());
}

json interval_to_json(const TemporalInterval& interval) {
    return {{"start", timestamp_to_json(interval.start)}, {"end", timestamp_to_json(interval.end)}};
}

TemporalInterval interval_from_json(const json& j) {
    TemporalInterval interval{timestamp_from_json(j.value("start", json(nullptr))),
                              timestamp_from_json(j.value("end", json(nullptr)))};
    interval.validate();
    return interval;
}

json properties_to_json(const PropertyMap& properties) {
    json out = json::object();
    for (const auto& [key, value] : properties) {
        if (const auto* plain = std::get_if<std::string>(&value)) {
            out[key] = *plain;
            continue;
        }
        json list = json::array();
        for (const auto& c : std::get<CandidateSet>(value)) {
            list.push_back({{"value", c.value},
                            {"confidence", c.confidence},
                            {"context", c.context},
                            {"contexts", c.contexts},
                            {"frequency_count", c.frequency_count},
                            {"last_seen", timestamp_to_json(c.last_seen)},
                            {"source_weight", c.source_weight}});
        }
        out[key] = std::move(list);
    }
    return out;
}

PropertyMap properties_from_json(const json& j) {
    PropertyMap properties;
    for (const auto& [key, value] : j.items()) {
        if (value.is_string()) {
            properties.emplace(key, value.get<std::string>());
            continue;
        }
        CandidateSet set;
        for (const auto& c : value) {
            PropertyCandidate candidate;
            candidate.value = c.at("value").get<std::string>();
            candidate.confidence = c.at("confidence").get<double>();
            candidate.context = c.value("context", "");
            candidate.contexts = c.value("contexts", std::vector<std::string>{});
            candidate.frequency_count = c.at("frequency_count").get<std::uint64_t>();
            candidate.last_seen = timestamp_from_json(c.value("last_seen", json(nullptr)));
            candidate.source_weight = c.value("source_weight", 1.0);
            set.push_back(std::move(candidate));
        }
        properties.emplace(key, std::move(set));
    }
    return properties;
}

json schema_to_json(const RelationSchema& schema) {
    return {{"subject_type", schema.subject_type},
            {"relation", schema.relation},
            {"object_type", schema.object_type},
            {"exclusive", schema.exclusive}};
}

RelationSchema schema_from_json(const json& j) {
    return {j.at("subject_type").get<std::string>(), j.at("relation").get<std::string>(),
            j.at("object_type").get<std::string>(), j.value("exclusive", false)};
}

json entity_to_json(const Entity& entity) {
    return {{"id", entity.id},
            {"type", entity.type},
            {"name", entity.name},
            {"description", entity.description},
            {"properties", properties_to_json(entity.properties)},
            {"embedding_version", entity.embedding_version}};
}

Entity entity_from_json(const json& j) {
    Entity e;
    e.id = j.at("id").get<std::string>();
    e.type = j.value("type", "");
    e.name = j.at("name").get<std::string>();
    e.description = j.value("description", "");
    e.properties = properties_from_json(j.value("properties", json::object()));
    e.embedding_version = j.value("embedding_version", std::int64_t{0});
    return e;
}

json edge_to_json(const Edge& edge) {
    return {{"id", edge.id},
            {"source", edge.source},
            {"relation", edge.relation},
            {"target", edge.target},
            {"interval", interval_to_json(edge.interval)},
            {"properties", properties_to_json(edge.properties)}};
}

Edge edge_from_json(const json& j) {
    Edge e;
    e.id = j.at("id").get<std::string>();
    e.source = j.at("source").get<std::string>();
    e.relation = j.at("relation").get<std::string>();
    e.target = j.at("target").get<std::string>();
    e.interval = interval_from_json(j.value("interval", json::object()));
    e.properties = properties_from_json(j.value("properties", json::object()));
    return e;
}

} // namespace tkg
