#include "tkg/snapshot.hpp"

#include "tkg/error.hpp"
#include "tkg/json_io.hpp"

#include <fstream>
#include <set>

namespace tkg {

void snapshot_save(const GraphStore& store, std::ostream& out) {
    out << json{{"kind", "header"}, {"format_version", kSnapshotFormatVersion}, {"revision", store.revision()}}.dump()
        << '\n';
    for (const auto& [_, schema] : store.schemas()) {
        json record = schema_to_json(schema);
        record["kind"] = "schema";
        out << record.dump() << '\n';
    }
    for (const auto& [_, entity] : store.entities()) {
        json record = entity_to_json(entity);
        record["kind"] = "entity";
        out << record.dump() << '\n';
    }
    for (const auto& [_, edge] : store.edges()) {
        json record = edge_to_json(edge);
        record["kind"] = "edge";
        out << record.dump() << '\n';
    }
}

void snapshot_save(const GraphStore& store, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ValidationError("cannot write snapshot to " + path.string());
    }
    snapshot_save(store, out);
}

GraphStore snapshot_load(std::istream& in) {
    GraphStore store;
    bool header_seen = false;
    std::int64_t revision = 0;
    std::set<std::string> entity_ids;
    for_each_jsonl(in, [&](const json& record, std::size_t line) {
        const std::string kind = record.at("kind").get<std::string>();
        if (kind == "header") {
            if (header_seen) {
                throw ParseError("duplicate header record", line);
            }
            const int version = record.at("format_version").get<int>();
            if (version != kSnapshotFormatVersion) {
                throw ParseError("unsupported format_version " + std::to_string(version), line);
            }
            revision = record.at("revision").get<std::int64_t>();
            header_seen = true;
            return;
        }
        if (!header_seen) {
            throw ParseError("snapshot must start with a header record", line);
        }
        if (kind == "schema") {
            store.register_schema(schema_from_json(record));
        } else if (kind == "entity") {
            Entity entity = entity_from_json(record);
            if (!entity_ids.insert(entity.id).second) {
                throw ParseError("duplicate entity id '" + entity.id + "'", line);
            }
            store.upsert_entity(std::move(entity));
        } else if (kind == "edge") {
            store.insert_edge(edge_from_json(record));
        } else {
            throw ParseError("unknown record kind '" + kind + "'", line);
        }
    });
    if (!header_seen) {
        throw ParseError("missing header record", 0);
    }
    store.set_revision(revision);
    return store;
}

GraphStore snapshot_load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open snapshot " + path.string());
    }
    return snapshot_load(in);
}

} // namespace tkg
