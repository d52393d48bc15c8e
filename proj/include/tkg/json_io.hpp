#pragma once

// JSON encodings shared by the snapshot, corpus, audit and report formats.

#include "json.hpp"
#include "tkg/graph.hpp"

namespace tkg {

using json = nlohmann::json;

// ISO-8601 string, or null for Unknown.
json timestamp_to_json(const Timestamp& t);
Timestamp timestamp_from_json(const json& j);

json interval_to_json(const TemporalInterval& interval);
TemporalInterval interval_from_json(const json& j);

json properties_to_json(const PropertyMap& properties);
PropertyMap properties_from_json(const json& j);

json schema_to_json(const RelationSchema& schema);
RelationSchema schema_from_json(const json& j);

json entity_to_json(const Entity& entity);
Entity entity_from_json(const json& j);

json edge_to_json(const Edge& edge);
Edge edge_from_json(const json& j);

// Reads one JSONL record per non-blank line. Calls `handle(record, line_no)`.
template <typename Handler>
void for_each_jsonl(std::istream& in, Handler&& handle);

} // namespace tkg

#include <istream>
#include <string>

#include "tkg/error.hpp"

namespace tkg {

template <typename Handler>
void for_each_jsonl(std::istream& in, Handler&& handle) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
        }
        try {
            handle(record, line_no);
        } catch (const ParseError&) {
            throw;
        } catch (const json::exception& e) {
            throw ParseError(std::string("invalid record: ") + e.what(), line_no);
        } catch (const ValidationError& e) {
            throw ParseError(e.what(), line_no);
        }
    }
}

} // namespace tkg
