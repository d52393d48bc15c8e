#include "helpers.hpp"

#include "tkg/error.hpp"

#include <gtest/gtest.h>

using namespace tkg;
using test::edge;
using test::entity;

TEST(GraphStore, UpsertAssignsIdsAndReplacesWholesale) {
    GraphStore g;
    const auto id = g.upsert_entity(entity("Person", "Ada"));
    EXPECT_EQ(g.entities().size(), 1u);
    Entity replacement = entity("Person", "Ada Lovelace", "mathematician", id);
    g.upsert_entity(replacement);
    EXPECT_EQ(g.entities().size(), 1u);
    EXPECT_EQ(g.entity(id).name, "Ada Lovelace");
    EXPECT_EQ(g.entity(id).description, "mathematician");
}

TEST(GraphStore, RejectsEmptyName) {
    GraphStore g;
    EXPECT_THROW(g.upsert_entity(entity("Person", "")), ValidationError);
    EXPECT_EQ(g.revision(), 0);
}

TEST(GraphStore, EdgesAreIndexedBothWays) {
    GraphStore g;
    const auto a = g.upsert_entity(entity("Person", "A"));
    const auto b = g.upsert_entity(entity("Team", "B"));
    const auto e = g.insert_edge(edge(a, "plays for", b, test::years(2001, 2003)));
    EXPECT_EQ(g.out_edge_ids(a), std::vector<EdgeId>{e});
    EXPECT_EQ(g.in_edge_ids(b), std::vector<EdgeId>{e});
    EXPECT_NO_THROW(g.audit());
}

TEST(GraphStore, AcceptsHalfKnownIntervalAndRejectsReversedOne) {
    GraphStore g;
    const auto a = g.upsert_entity(entity("Person", "A"));
    const auto b = g.upsert_entity(entity("Team", "B"));
    EXPECT_NO_THROW(g.insert_edge(edge(a, "plays for", b, {Timestamp::unknown(), Timestamp::from_date(2004)})));
    EXPECT_THROW(g.insert_edge(edge(a, "plays for", b, {Timestamp::from_date(2005), Timestamp::from_date(2004)})),
                 IntervalError);
}

TEST(GraphStore, RejectsDanglingEndpointsAndDuplicates) {
    GraphStore g;
    const auto a = g.upsert_entity(entity("Person", "A"));
    EXPECT_THROW(g.insert_edge(edge(a, "knows", "V999999")), ReferentialError);
    EXPECT_THROW(g.insert_edge(edge("V999999", "knows", a)), ReferentialError);
    const auto b = g.upsert_entity(entity("Person", "B"));
    g.insert_edge(edge(a, "knows", b, test::years(2000, 2001)));
    EXPECT_THROW(g.insert_edge(edge(a, "knows", b, test::years(2000, 2001))), ValidationError);
    EXPECT_NO_THROW(g.insert_edge(edge(a, "knows", b, test::years(2002, 2003))));
}

TEST(GraphStore, FindEdgesFilters) {
    GraphStore g;
    const auto a = g.upsert_entity(entity("Person", "A"));
    const auto b = g.upsert_entity(entity("Team", "B"));
    const auto c = g.upsert_entity(entity("Team", "C"));
    EXPECT_TRUE(g.find_edges(a, std::nullopt, b).empty());
    g.insert_edge(edge(a, "plays for", b));
    g.insert_edge(edge(a, "coaches", b));
    g.insert_edge(edge(a, "plays for", c));
    EXPECT_EQ(g.find_edges(a, std::string("coaches"), b).size(), 1u);
    EXPECT_EQ(g.find_edges(a, std::nullopt, b).size(), 2u);
    const auto all = g.find_edges(a);
    ASSERT_EQ(all.size(), 3u);
    EXPECT_TRUE(std::is_sorted(all.begin(), all.end(), [](const Edge& x, const Edge& y) { return x.id < y.id; }));
    EXPECT_THROW(g.find_edges("V999999"), ReferentialError);
}

TEST(GraphStore, OutRelationsCounts) {
    GraphStore g;
    const auto p = g.upsert_entity(entity("Person", "P"));
    const auto leaf = g.upsert_entity(entity("City", "Leaf"));
    EXPECT_TRUE(g.out_relations(leaf).empty());
    EdgeId born;
    for (int i = 0; i < 3; ++i) {
        const auto t = g.upsert_entity(entity("Team", "T" + std::to_string(i)));
        g.insert_edge(edge(p, "plays for", t));
    }
    born = g.insert_edge(edge(p, "born in", leaf));
    EXPECT_EQ(g.out_relations(p),
              (std::vector<RelationCount>{{"born in", 1}, {"plays for", 3}}));
    g.remove_edge(born);
    EXPECT_EQ(g.out_relations(p), (std::vector<RelationCount>{{"plays for", 3}}));
    EXPECT_THROW(g.out_relations("V999999"), ReferentialError);
}

TEST(GraphStore, ExclusivePropertiesMustBeCandidateSets) {
    GraphStore g;
    g.register_schema({"Person", "birth year", "Year", true});
    Entity e = entity("Person", "A");
    e.properties["birth year"] = std::string("1970");
    EXPECT_THROW(g.upsert_entity(e), ValidationError);
    PropertyCandidate c;
    c.value = "1970";
    c.confidence = 0.5;
    c.frequency_count = 1;
    e.properties["birth year"] = CandidateSet{c, c};
    EXPECT_THROW(g.upsert_entity(e), ValidationError);  // duplicate values
    e.properties["birth year"] = CandidateSet{c};
    EXPECT_NO_THROW(g.upsert_entity(e));
    e.properties["nickname"] = CandidateSet{c};
    EXPECT_THROW(g.upsert_entity(e), ValidationError);  // non-exclusive key as set
}

TEST(GraphStore, SchemaExclusiveFlagIsImmutable) {
    GraphStore g;
    g.register_schema({"Person", "birth year", "Year", true});
    EXPECT_THROW(g.register_schema({"Person", "birth year", "Year", false}), ValidationError);
    EXPECT_THROW(g.register_schema({"Team", "birth year", "Year", false}), ValidationError);
    EXPECT_NO_THROW(g.register_schema({"Person", "birth year", "Year", true}));
    EXPECT_TRUE(g.is_exclusive("birth year"));
    EXPECT_FALSE(g.is_exclusive("plays for"));
}

TEST(GraphStore, ExclusiveRelationsAreNotEdges) {
    GraphStore g;
    g.register_schema({"Person", "birth year", "Year", true});
    const auto a = g.upsert_entity(entity("Person", "A"));
    const auto b = g.upsert_entity(entity("Year", "1970"));
    EXPECT_THROW(g.insert_edge(edge(a, "birth year", b)), ValidationError);
}

TEST(GraphStore, RemovingEntityDropsIncidentEdges) {
    GraphStore g;
    const auto a = g.upsert_entity(entity("Person", "A"));
    const auto b = g.upsert_entity(entity("Person", "B"));
    const auto c = g.upsert_entity(entity("Person", "C"));
    g.insert_edge(edge(a, "knows", b));
    g.insert_edge(edge(b, "knows", c));
    g.insert_edge(edge(c, "knows", a));
    g.remove_entity(b);
    EXPECT_EQ(g.edges().size(), 1u);
    EXPECT_NO_THROW(g.audit());
}

TEST(GraphStore, BatchIsAtomicAndBumpsRevisionOnce) {
    GraphStore g;
    const auto a = g.upsert_entity(entity("Person", "A"));
    const GraphStore before = g;
    EXPECT_THROW(g.apply_batch([&](GraphStore& s) {
        s.upsert_entity(entity("Person", "B"));
        s.insert_edge(edge(a, "knows", "V999999"));
    }),
                 ReferentialError);
    EXPECT_EQ(g, before);
    g.apply_batch([&](GraphStore& s) {
        s.upsert_entity(entity("Person", "B"));
        s.upsert_entity(entity("Person", "C"));
    });
    EXPECT_EQ(g.revision(), before.revision() + 1);
    EXPECT_EQ(g.entities().size(), 3u);
}

TEST(GraphStore, AuditHoldsAfterRandomMutations) {
    Rng rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        GraphStore g = test::random_store(rng, 10, 25);
        std::vector<EdgeId> ids;
        for (const auto& [id, _] : g.edges()) {
            ids.push_back(id);
        }
        for (std::size_t i = 0; i < ids.size(); i += 3) {
            g.remove_edge(ids[i]);
        }
        if (!g.entities().empty() && rng.unit() < 0.5) {
            g.remove_entity(g.entities().begin()->first);
        }
        EXPECT_NO_THROW(g.audit());
    }
}
