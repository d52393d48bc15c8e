#pragma once

#include "tkg/graph.hpp"

#include <filesystem>
#include <iosfwd>

namespace tkg {

inline constexpr int kSnapshotFormatVersion = 1;

// JSONL: a header record {kind:"header", format_version, revision}, then
// schema, entity and edge records in id order. Output is byte-stable.
void snapshot_save(const GraphStore& store, std::ostream& out);
void snapshot_save(const GraphStore& store, const std::filesystem::path& path);

// Throws ParseError carrying the offending line number.
GraphStore snapshot_load(std::istream& in);
GraphStore snapshot_load(const std::filesystem::path& path);

} // namespace tkg
