#pragma once

#include "tkg/fixtures.hpp"
#include "tkg/graph.hpp"

#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>

namespace tkg::test {

inline Entity entity(std::string type, std::string name, std::string desc = "", std::string id = "") {
    Entity e;
    e.id = std::move(id);
    e.type = std::move(type);
    e.name = std::move(name);
    e.description = std::move(desc);
    return e;
}

inline Edge edge(EntityId s, std::string r, EntityId t, TemporalInterval iv = {}) {
    Edge e;
    e.source = std::move(s);
    e.relation = std::move(r);
    e.target = std::move(t);
    e.interval = iv;
    return e;
}

inline TemporalInterval years(int a, int b) {
    return {Timestamp::from_date(a, 1, 1), Timestamp::from_date(b, 12, 31)};
}

inline std::string golden_path(const std::string& name) {
    return std::string(TKG_GOLDEN_DIR) + "/" + name;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Random store with up to `max_nodes` entities and `max_edges` edges. Some
// intervals are unknown on one or both ends.
inline GraphStore random_store(Rng& rng, std::size_t max_nodes, std::size_t max_edges) {
    GraphStore g;
    const std::vector<std::string> relations = {"knows", "works for", "located in", "plays for"};
    const std::size_t n = 1 + rng.below(max_nodes);
    std::vector<EntityId> ids;
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back(g.upsert_entity(entity(i % 2 ? "Person" : "Place", "node " + std::to_string(i))));
    }
    const std::size_t m = rng.below(max_edges + 1);
    for (std::size_t i = 0; i < m; ++i) {
        Edge e = edge(ids[rng.below(n)], relations[rng.below(relations.size())], ids[rng.below(n)]);
        const int a = static_cast<int>(rng.between(1990, 2020));
        const int b = a + static_cast<int>(rng.between(0, 5));
        switch (rng.below(4)) {
        case 0: e.interval = years(a, b); break;
        case 1: e.interval = {Timestamp::unknown(), Timestamp::from_date(b, 6, 1)}; break;
        case 2: e.interval = {Timestamp::from_date(a, 2, 3), Timestamp::unknown()}; break;
        default: break;
        }
        bool duplicate = false;
        for (const Edge& x : g.find_edges(e.source, e.relation, e.target)) {
            duplicate = duplicate || x.interval == e.interval;
        }
        if (!duplicate) {
            g.insert_edge(e);
        }
    }
    return g;
}

// Every simple path (no repeated entity) of 0..max_depth edges starting at
// one of `anchors`, keyed as anchor followed by edge ids. Walks the edge map
// directly rather than the adjacency indexes.
inline std::set<std::vector<std::string>> enumerate_paths(const GraphStore& g, const std::vector<EntityId>& anchors,
                                                          std::size_t max_depth) {
    std::set<std::vector<std::string>> out;
    std::function<void(std::vector<std::string>&, std::set<EntityId>&, const EntityId&)> walk =
        [&](std::vector<std::string>& key, std::set<EntityId>& seen, const EntityId& at) {
            out.insert(key);
            if (key.size() - 1 == max_depth) {
                return;
            }
            for (const auto& [id, e] : g.edges()) {
                if (e.source != at || seen.contains(e.target)) {
                    continue;
                }
                key.push_back(id);
                seen.insert(e.target);
                walk(key, seen, e.target);
                seen.erase(e.target);
                key.pop_back();
            }
        };
    for (const auto& a : anchors) {
        std::vector<std::string> key{a};
        std::set<EntityId> seen{a};
        walk(key, seen, a);
    }
    return out;
}

} // namespace tkg::test
