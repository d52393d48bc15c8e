#include "helpers.hpp"

#include "tkg/error.hpp"
#include "tkg/evolve.hpp"

#include <gtest/gtest.h>

#include <set>
#include <sstream>
#include <tuple>

using namespace tkg;

namespace {

struct Stack {
    std::shared_ptr<HashEncoder> encoder = std::make_shared<HashEncoder>();
    DeterministicOracle oracle{encoder};
};

Document doc(std::string id, std::string text, double weight = 1.0) {
    return {std::move(id), "", std::move(text), Timestamp::from_date(2020, 1, 1), weight};
}

using EdgeKey = std::tuple<std::string, std::string, std::string, std::string>;

std::set<EdgeKey> edge_set(const GraphStore& g) {
    std::set<EdgeKey> out;
    for (const auto& [_, e] : g.edges()) {
        out.emplace(g.entity(e.source).name, e.relation, g.entity(e.target).name,
                    e.interval.start.date_label() + "/" + e.interval.end.date_label());
    }
    return out;
}

bool same_content(const GraphStore& a, const GraphStore& b) {
    return a.entities() == b.entities() && a.edges() == b.edges() && a.schemas() == b.schemas();
}

const Timestamp kNow = Timestamp::from_date(2021, 1, 1);

} // namespace

TEST(Confidence, BoundaryIdentities) {
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const double f = rng.unit(), w = rng.unit(), dt = rng.unit() * 1000, gamma = rng.unit() - 0.5;
        EXPECT_NEAR(candidate_confidence(f, dt, w, gamma, 0.0), w, 1e-12);
        EXPECT_NEAR(candidate_confidence(f, 0.0, w, gamma, 1.0), f / 2.0, 1e-12);
    }
}

TEST(Confidence, StaysInUnitInterval) {
    Rng rng(2);
    for (int i = 0; i < 10000; ++i) {
        const double c = candidate_confidence(rng.unit(), rng.unit() * 1e5, rng.unit(), (rng.unit() - 0.5) * 2,
                                              rng.unit());
        EXPECT_GE(c, 0.0);
        EXPECT_LE(c, 1.0);
    }
}

TEST(Confidence, MajorityBirthYearWins) {
    EvolutionConfig config;
    config.delta = 0.8;
    const Timestamp seen = Timestamp::from_date(2020, 6, 1);
    CandidateSet slot;
    for (int i = 0; i < 7; ++i) {
        slot = merge_exclusive_property(std::move(slot), {"1974", "src-" + std::to_string(i), seen, 0.9}, config, kNow);
    }
    for (int i = 7; i < 10; ++i) {
        slot = merge_exclusive_property(std::move(slot), {"1976", "src-" + std::to_string(i), seen, 0.9}, config, kNow);
    }
    ASSERT_EQ(slot.size(), 2u);
    EXPECT_EQ(slot[0].value, "1974");
    EXPECT_EQ(slot[0].frequency_count, 7u);
    EXPECT_EQ(slot[1].frequency_count, 3u);
    EXPECT_GT(slot[0].confidence, slot[1].confidence);
}

TEST(Confidence, MergeKeepsCandidatesAndTracksSources) {
    EvolutionConfig config;
    config.context_cap = 3;
    CandidateSet slot;
    slot = merge_exclusive_property(slot, {"a", "c1", Timestamp::from_date(2019), 0.4}, config, kNow);
    slot = merge_exclusive_property(slot, {"b", "c2", Timestamp::from_date(2020), 1.0}, config, kNow);
    for (int i = 0; i < 5; ++i) {
        slot = merge_exclusive_property(slot, {"a", "x" + std::to_string(i), Timestamp::from_date(2018), 0.9}, config,
                                        kNow);
    }
    ASSERT_EQ(slot.size(), 2u);
    EXPECT_EQ(slot[0].frequency_count, 6u);
    EXPECT_DOUBLE_EQ(slot[0].source_weight, 0.9);
    EXPECT_EQ(slot[0].last_seen, Timestamp::from_date(2019));
    EXPECT_EQ(slot[0].context, "x4");
    EXPECT_EQ(slot[0].contexts, (std::vector<std::string>{"x2", "x3", "x4"}));
    for (const auto& c : slot) {
        EXPECT_GE(c.confidence, 0.0);
        EXPECT_LE(c.confidence, 1.0);
    }
    EXPECT_THROW(merge_exclusive_property(slot, {"", "c", kNow, 1.0}, config, kNow), ValidationError);
    EXPECT_THROW(merge_exclusive_property(slot, {"a", "c", kNow, 0.0}, config, kNow), ValidationError);
}

TEST(Confidence, RecencyFavoursFresherCandidateUnderNegativeGamma) {
    EvolutionConfig config;
    CandidateSet slot;
    slot = merge_exclusive_property(slot, {"old", "c1", Timestamp::from_date(2000), 1.0}, config, kNow);
    slot = merge_exclusive_property(slot, {"new", "c2", Timestamp::from_date(2020, 12, 30), 1.0}, config, kNow);
    EXPECT_GT(slot[1].confidence, slot[0].confidence);
}

TEST(EvolutionConfig, Validation) {
    EvolutionConfig c;
    EXPECT_NO_THROW(c.validate());
    c.delta = 1.5;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.theta_entity = -0.1;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.align_topk = 0;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Alignment, PixarCandidateAlignsAtFixtureThreshold) {
    Stack s;
    GraphStore g;
    const auto pixar = g.upsert_entity(
        test::entity("Organization", "Pixar Animation Studio", "American computer animation studio"));
    g.upsert_entity(test::entity("Organization", "Walt Disney Company", "mass media conglomerate"));
    const auto index = build_entity_index(g, *s.encoder);
    EvolutionConfig config;
    config.theta_entity = 0.3;
    const Alignment a = align_entity(test::entity("Organization", "Pixar Company", "computer animation studio"), g,
                                     index, *s.encoder, s.oracle, config);
    ASSERT_TRUE(a.aligned());
    EXPECT_EQ(*a.target, pixar);
    EXPECT_GT(a.score, 0.3);

    config.theta_entity = 0.9;
    EXPECT_FALSE(align_entity(test::entity("Organization", "Pixar Company", "computer animation studio"), g, index,
                              *s.encoder, s.oracle, config)
                     .aligned());
}

TEST(Alignment, EmptyStoreInserts) {
    Stack s;
    GraphStore g;
    const auto index = build_entity_index(g, *s.encoder);
    EXPECT_FALSE(align_entity(test::entity("Person", "Ada"), g, index, *s.encoder, s.oracle, {}).aligned());
}

TEST(Synonyms, EmployedAsMatchesWorksAsAtFixtureThreshold) {
    Stack s;
    GraphStore g;
    g.register_schema({"Person", "works as", "Organization", false});
    g.register_schema({"Person", "born in", "Place", true});
    const auto index = build_schema_index(g, *s.encoder);
    EvolutionConfig config;
    config.theta_relation = 0.2;
    const SynonymMatch m =
        match_relation_synonym({"Person", "employed as", "Organization", false}, g, index, *s.encoder, config);
    ASSERT_TRUE(m.matched());
    EXPECT_EQ(m.schema->relation, "works as");
    EXPECT_NEAR(m.score, 0.5714285714285715, 1e-9);

    config.theta_relation = 0.6;
    EXPECT_FALSE(
        match_relation_synonym({"Person", "employed as", "Organization", false}, g, index, *s.encoder, config).matched());
}

TEST(Synonyms, EmptyRegistryNeverMatches) {
    Stack s;
    GraphStore g;
    const auto index = build_schema_index(g, *s.encoder);
    EXPECT_FALSE(match_relation_synonym({"A", "r", "B", false}, g, index, *s.encoder, {}).matched());
}

class RuleTable : public ::testing::Test {
protected:
    void SetUp() override {
        ada = g.upsert_entity(test::entity("Person", "Ada"));
        acme = g.upsert_entity(test::entity("Organization", "Acme"));
        Edge e = test::edge(ada, "works as", acme, test::years(2001, 2005));
        e.properties["role"] = std::string("engineer");
        g.insert_edge(e);
        Entity& a = g.mutable_entity(ada);
        PropertyCandidate c;
        c.value = "1974";
        c.frequency_count = 1;
        c.contexts = {"doc-1"};
        c.context = "doc-1";
        a.properties["birth year"] = CandidateSet{c};
    }

    CandidateEdge edge_candidate(std::string relation, TemporalInterval iv, PropertyMap props = {}) {
        CandidateEdge c;
        c.source = ada;
        c.relation = std::move(relation);
        c.target = acme;
        c.interval = iv;
        c.properties = std::move(props);
        return c;
    }

    CandidateEdge slot_candidate(std::string relation, std::string value, std::string context) {
        CandidateEdge c;
        c.source = ada;
        c.relation = std::move(relation);
        c.value = std::move(value);
        c.context = std::move(context);
        c.exclusive = true;
        return c;
    }

    GraphStore g;
    EntityId ada, acme;
};

TEST_F(RuleTable, NonExclusiveCases) {
    const auto iv = test::years(2001, 2005);
    const auto other = test::years(2010, 2012);
    EXPECT_EQ(resolve_edge_action(edge_candidate("works as", other), std::nullopt, g).kind, MergeKind::Insert);
    EXPECT_EQ(resolve_edge_action(edge_candidate("works as", iv), std::nullopt, g).kind, MergeKind::Skip);
    EXPECT_EQ(resolve_edge_action(edge_candidate("works as", iv, {{"role", std::string("engineer")}}), std::nullopt, g)
                  .kind,
              MergeKind::Skip);
    EXPECT_EQ(resolve_edge_action(edge_candidate("works as", iv, {{"role", std::string("manager")}}), std::nullopt, g)
                  .kind,
              MergeKind::Merge);
    // A match onto the candidate's own relation is not a mapping.
    EXPECT_EQ(resolve_edge_action(edge_candidate("works as", iv), std::string("works as"), g).kind, MergeKind::Skip);

    const MergeAction mm = resolve_edge_action(edge_candidate("employed as", iv), std::string("works as"), g);
    EXPECT_EQ(mm.kind, MergeKind::MapMerge);
    EXPECT_EQ(mm.mapped_relation, std::optional<std::string>("works as"));
    const MergeAction mi = resolve_edge_action(edge_candidate("employed as", other), std::string("works as"), g);
    EXPECT_EQ(mi.kind, MergeKind::MapInsert);
    EXPECT_EQ(mi.mapped_relation, std::optional<std::string>("works as"));
    EXPECT_EQ(mi.rule_id(), 5);
}

TEST_F(RuleTable, ExclusiveCases) {
    EXPECT_EQ(resolve_edge_action(slot_candidate("death year", "2000", "doc-2"), std::nullopt, g).kind,
              MergeKind::Insert);
    EXPECT_EQ(resolve_edge_action(slot_candidate("birth year", "1974", "doc-1"), std::nullopt, g).kind,
              MergeKind::Skip);
    EXPECT_EQ(resolve_edge_action(slot_candidate("birth year", "1974", "doc-2"), std::nullopt, g).kind,
              MergeKind::Merge);
    EXPECT_EQ(resolve_edge_action(slot_candidate("birth year", "1976", "doc-1"), std::nullopt, g).kind,
              MergeKind::Merge);
    EXPECT_EQ(resolve_edge_action(slot_candidate("year of birth", "1974", "doc-1"), std::string("birth year"), g).kind,
              MergeKind::MapMerge);
    EXPECT_EQ(resolve_edge_action(slot_candidate("died", "2000", "doc-1"), std::string("death year"), g).kind,
              MergeKind::MapInsert);
}

TEST_F(RuleTable, MappedActionsCarryRelationOthersDoNot) {
    const auto iv = test::years(2001, 2005);
    for (const auto& rel : {std::optional<std::string>(), std::optional<std::string>("works as"),
                            std::optional<std::string>("manages")}) {
        for (const auto& name : {"works as", "employed as"}) {
            const MergeAction a = resolve_edge_action(edge_candidate(name, iv), rel, g);
            const bool mapped = a.kind == MergeKind::MapMerge || a.kind == MergeKind::MapInsert;
            EXPECT_EQ(mapped, a.mapped_relation.has_value());
            EXPECT_FALSE(a.reason.empty());
        }
    }
}

TEST_F(RuleTable, UnalignedEndpointsAreRejected) {
    CandidateEdge c = edge_candidate("works as", {});
    c.source = "missing";
    EXPECT_THROW(resolve_edge_action(c, std::nullopt, g), PreconditionError);
    c = edge_candidate("works as", {});
    c.target.reset();
    EXPECT_THROW(resolve_edge_action(c, std::nullopt, g), PreconditionError);
    c.target = "missing";
    EXPECT_THROW(resolve_edge_action(c, std::nullopt, g), PreconditionError);
}

TEST(PropertiesSubset, KeyWiseContainment) {
    PropertyCandidate c;
    c.value = "x";
    const PropertyMap existing{{"a", std::string("1")}, {"s", CandidateSet{c}}};
    EXPECT_TRUE(properties_subset({}, existing));
    EXPECT_TRUE(properties_subset({{"a", std::string("1")}}, existing));
    EXPECT_TRUE(properties_subset({{"s", std::string("x")}}, existing));
    EXPECT_FALSE(properties_subset({{"a", std::string("2")}}, existing));
    EXPECT_FALSE(properties_subset({{"b", std::string("1")}}, existing));
}

TEST(Apply, EmptyPartialGraphAdvancesRevisionOnly) {
    Stack s;
    GraphStore g;
    g.upsert_entity(test::entity("Person", "Ada"));
    const GraphStore before = g;
    auto indexes = EvolutionIndexes::build(g, *s.encoder);
    const auto report =
        apply_partial_graph({}, g, indexes, *s.encoder, s.oracle, {}, {"d", kNow, 1.0}, kNow);
    EXPECT_EQ(g.revision(), before.revision() + 1);
    EXPECT_TRUE(same_content(g, before));
    EXPECT_EQ(report.entities_inserted + report.entities_aligned, 0u);
}

TEST(Apply, FailureLeavesStoreAndIndexesUntouched) {
    Stack s;
    GraphStore g;
    g.upsert_entity(test::entity("Person", "Ada"));
    const GraphStore before = g;
    auto indexes = EvolutionIndexes::build(g, *s.encoder);
    PartialGraph bad = parse_fact_block("FACT|Person|Bob|works as|Job|Pilot|||false");
    bad.edges.push_back(bad.edges.front());
    bad.edges.back().subject = 99;
    EXPECT_THROW(apply_partial_graph(bad, g, indexes, *s.encoder, s.oracle, {}, {"d", kNow, 1.0}, kNow),
                 ValidationError);
    EXPECT_EQ(g, before);
    EXPECT_EQ(indexes.entities.size(), 1u);
    EXPECT_EQ(indexes.schemas.size(), 0u);
}

TEST(Apply, InsertsThenSkipsAndTracksAudit) {
    Stack s;
    GraphStore g;
    const std::vector<Document> corpus = {
        doc("d1", "FACT|Person|Ada Lovelace|works as|Job|Analyst|1840-01-01|1843-12-31|false\n"
                  "FACT|Person|Ada Lovelace|birth year|Year|1815|||true"),
    };
    const auto first = update_from_corpus(corpus, g, *s.encoder, s.oracle, {}, kNow);
    EXPECT_EQ(first.entities_inserted, 2u);
    EXPECT_EQ(first.count(MergeKind::Insert), 2u);
    EXPECT_EQ(g.edges().size(), 1u);
    const auto second = update_from_corpus(corpus, g, *s.encoder, s.oracle, {}, kNow);
    EXPECT_EQ(second.count(MergeKind::Skip), 2u);
    EXPECT_EQ(second.entities_aligned, 2u);

    std::size_t edge_records = 0;
    for (const auto& r : second.audit) {
        edge_records += r.at("stage") == "edge";
    }
    EXPECT_EQ(edge_records, 2u);
    EXPECT_EQ(second.summary().at("edges").at("Skip"), 2);
}

TEST(Apply, SynonymFactMapsOntoRegisteredRelation) {
    Stack s;
    GraphStore g;
    EvolutionConfig config;
    config.theta_relation = 0.2;
    update_from_corpus({doc("d1", "FACT|Person|Ada|works as|Organization|Acme|2001-01-01|2005-12-31|false")}, g,
                       *s.encoder, s.oracle, config, kNow);
    const auto r = update_from_corpus(
        {doc("d2", "FACT|Person|Ada|employed as|Organization|Acme|2001-01-01|2005-12-31|false\n"
                   "FACT|Person|Ada|employed as|Organization|Acme|2010-01-01|2011-12-31|false")},
        g, *s.encoder, s.oracle, config, kNow);
    EXPECT_EQ(r.count(MergeKind::MapMerge), 1u);
    EXPECT_EQ(r.count(MergeKind::MapInsert), 1u);
    for (const auto& [_, e] : g.edges()) {
        EXPECT_EQ(e.relation, "works as");
    }
    EXPECT_EQ(g.edges().size(), 2u);
}

TEST(Apply, FrequencyCountsEqualObservations) {
    Stack s;
    GraphStore g;
    std::vector<Document> corpus;
    for (int i = 0; i < 10; ++i) {
        corpus.push_back(doc("d" + std::to_string(i),
                             "FACT|Person|Ada|birth year|Year|" + std::string(i < 7 ? "1974" : "1976") + "|||true"));
    }
    EvolutionConfig config;
    config.delta = 0.8;
    update_from_corpus(corpus, g, *s.encoder, s.oracle, config, kNow);
    ASSERT_EQ(g.entities().size(), 1u);
    const auto& slot = std::get<CandidateSet>(g.entities().begin()->second.properties.at("birth year"));
    std::uint64_t total = 0;
    for (const auto& c : slot) {
        total += c.frequency_count;
    }
    EXPECT_EQ(total, 10u);
    ASSERT_EQ(slot.size(), 2u);
    EXPECT_GT(slot[0].confidence, slot[1].confidence);
}

TEST(Apply, CorpusIsIdempotentUnderFrozenClock) {
    Stack s;
    GraphStore g;
    const std::vector<Document> corpus = {
        doc("d1", "FACT|Person|Ada|works as|Job|Analyst|1840-01-01|1843-12-31|false\n"
                  "FACT|Person|Ada|birth year|Year|1815|||true"),
        doc("d2", "FACT|Person|Ada|birth year|Year|1816|||true\nFACT|Person|Charles|works as|Job|Inventor|||false"),
        doc("d3", "FACT|Person|Charles|knows|Person|Ada|1833-06-05|unknown|false|venue=party"),
    };
    update_from_corpus(corpus, g, *s.encoder, s.oracle, {}, kNow);
    const GraphStore once = g;
    const auto again = update_from_corpus(corpus, g, *s.encoder, s.oracle, {}, kNow);
    EXPECT_TRUE(same_content(g, once));
    EXPECT_EQ(again.entities_inserted, 0u);
    EXPECT_EQ(again.count(MergeKind::Skip), 5u);
}

TEST(Apply, DisjointDocumentsCommute) {
    Stack s;
    const Document a = doc("a", "FACT|Person|Ada|works as|Job|Analyst|1840-01-01|1843-12-31|false");
    const Document b = doc("b", "FACT|Team|Rovers|played against|Team|Wanderers|1999-05-01|1999-05-01|false");
    GraphStore ab, ba;
    update_from_corpus({a, b}, ab, *s.encoder, s.oracle, {}, kNow);
    update_from_corpus({b, a}, ba, *s.encoder, s.oracle, {}, kNow);
    EXPECT_EQ(edge_set(ab), edge_set(ba));
    EXPECT_EQ(edge_set(ab).size(), 2u);
}

TEST(Apply, DocumentErrorsAreCollectedOrThrown) {
    Stack s;
    GraphStore g;
    const std::vector<Document> corpus = {doc("bad", "FACT|Person|Ada|works as"), doc("good", "FACT|A|x|r|B|y|||false")};
    const auto r = update_from_corpus(corpus, g, *s.encoder, s.oracle, {}, kNow);
    ASSERT_EQ(r.document_errors.size(), 1u);
    EXPECT_EQ(r.document_errors[0].rfind("bad: ", 0), 0u);
    EXPECT_EQ(r.documents_processed, 1u);
    EvolutionConfig strict;
    strict.fail_fast = true;
    GraphStore h;
    EXPECT_THROW(update_from_corpus(corpus, h, *s.encoder, s.oracle, strict, kNow), OracleFormatError);
}

TEST(Corpus, RoundTripAndValidation) {
    const std::vector<Document> docs = {doc("d1", "text one", 0.5), {"d2", "T", "two", Timestamp::unknown(), 1.0}};
    std::stringstream ss;
    save_corpus(docs, ss);
    const auto loaded = load_corpus(ss);
    ASSERT_EQ(loaded.size(), 2u);
    EXPECT_EQ(loaded[0].id, "d1");
    EXPECT_DOUBLE_EQ(loaded[0].source_weight, 0.5);
    EXPECT_EQ(loaded[0].published_at, Timestamp::from_date(2020, 1, 1));
    EXPECT_FALSE(loaded[1].published_at.known());

    std::stringstream dup(R"({"id":"x","text":"a"})" "\n" R"({"id":"x","text":"b"})" "\n");
    try {
        load_corpus(dup);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    std::stringstream weight(R"({"id":"x","text":"a","source_weight":0})" "\n");
    EXPECT_THROW(load_corpus(weight), ParseError);
}
