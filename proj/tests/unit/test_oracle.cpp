#include "helpers.hpp"

#include "json.hpp"
#include "tkg/error.hpp"
#include "tkg/oracle.hpp"

#include <gtest/gtest.h>

using namespace tkg;
using nlohmann::json;

namespace {

DeterministicOracle make() {
    return DeterministicOracle(std::make_shared<HashEncoder>());
}

} // namespace

TEST(DeterministicOracle, PlanIsTheWholeQuestion) {
    const auto oracle = make();
    const auto plan = oracle.plan_routes("Who directed Cast Away?", Timestamp::unknown(), 3);
    ASSERT_EQ(plan.routes.size(), 1u);
    EXPECT_EQ(plan.routes[0], std::vector<std::string>{"Who directed Cast Away?"});
    EXPECT_THROW(oracle.plan_routes("  ", Timestamp::unknown(), 3), ValidationError);
    EXPECT_THROW(oracle.plan_routes("q", Timestamp::unknown(), 0), ValidationError);
}

TEST(DeterministicOracle, MentionsMatchPinnedGolden) {
    const auto oracle = make();
    const json golden = json::parse(test::read_file(test::golden_path("mentions.json")));
    for (const auto& item : golden) {
        const auto got = oracle.extract_mentions(item.at("question"), Timestamp::unknown(), {});
        EXPECT_EQ(got.mentions, item.at("mentions").get<std::vector<std::string>>()) << item.at("question");
        EXPECT_EQ(got.temporal_contexts, item.at("temporal_contexts").get<std::vector<std::string>>());
    }
}

TEST(DeterministicOracle, MessiMentionCarriesYear) {
    const auto got = make().extract_mentions("Which team did Messi join in 2021?", Timestamp::unknown(), {});
    const auto it = std::find(got.mentions.begin(), got.mentions.end(), "Messi");
    ASSERT_NE(it, got.mentions.end());
    EXPECT_EQ(got.temporal_contexts[static_cast<std::size_t>(it - got.mentions.begin())], "2021");
}

TEST(DeterministicOracle, MentionsEmptyWithoutCapitalsOrDates) {
    const auto got = make().extract_mentions("who won the cup", Timestamp::unknown(), {});
    EXPECT_TRUE(got.mentions.empty());
    EXPECT_TRUE(got.temporal_contexts.empty());
}

TEST(DeterministicOracle, MentionListsStayAligned) {
    const auto oracle = make();
    for (const char* q : {"Did Tom Hanks act in Cast Away in 2000?", "What did the Bank of England do on 3 March 1999?",
                          "Which team has Real Madrid played against in 2014?", "x"}) {
        const auto got = oracle.extract_mentions(q, Timestamp::unknown(), {});
        EXPECT_EQ(got.mentions.size(), got.temporal_contexts.size()) << q;
    }
}

TEST(DeterministicOracle, EntityScores) {
    const auto oracle = make();
    const auto one = oracle.score_entities("Who is Ada?", Timestamp::unknown(), {}, {"ent_0: (Person: Ada)"});
    ASSERT_EQ(one.scores.size(), 1u);
    EXPECT_DOUBLE_EQ(one.scores.at("ent_0"), 1.0);
    const auto two = oracle.score_entities("Who is Ada?", Timestamp::unknown(), {}, {"Ada", "Ada"});
    EXPECT_DOUBLE_EQ(two.scores.at("ent_0"), 0.5);
    EXPECT_DOUBLE_EQ(two.scores.at("ent_1"), 0.5);
    EXPECT_THROW(oracle.score_entities("q", Timestamp::unknown(), {}, {}), ValidationError);
}

TEST(DeterministicOracle, EntityScoresSumToOneAndStayInRange) {
    const auto oracle = make();
    const auto r = oracle.score_entities("Which team did Lionel Messi play for?", Timestamp::unknown(), {},
                                         {"Lionel Messi", "Inter Miami", "unrelated words", "Barcelona team"});
    double sum = 0.0;
    for (const auto& [_, v] : r.scores) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(DeterministicOracle, RelationScores) {
    const auto oracle = make();
    EXPECT_TRUE(oracle.score_relations("q", {"g"}, {}).empty());
    const auto one = oracle.score_relations("q", {"anything"}, {{"plays for", 2}});
    EXPECT_DOUBLE_EQ(one.at("plays for"), 1.0);
    const auto two = oracle.score_relations("q", {"plays for"}, {{"born in", 1}, {"plays for", 3}});
    EXPECT_GT(two.at("plays for"), two.at("born in"));
}

TEST(DeterministicOracle, AlignScore) {
    const auto oracle = make();
    EXPECT_NEAR(oracle.align_score("type: Person | name: Ada", "type: Person | name: Ada"), 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(oracle.align_score("alpha beta", "gamma delta"), 0.0);
    const std::string a = entity_text("Organization", "Pixar Company", "computer animation studio");
    const std::string b = entity_text("Organization", "Pixar Animation Studio", "American computer animation studio");
    EXPECT_GT(oracle.align_score(a, b), 0.3);
    EXPECT_THROW(oracle.align_score("", "x"), ValidationError);
}

TEST(FactBlock, ParsesRecordsAndUnknownTimes) {
    const std::string text = "Some prose.\n"
                             "FACT|Person|Ada|works as|Job|Engineer|2001-01-01|unknown|false\n"
                             "FACT|Person|Ada|birth year|Year|1974|||true|source=registry\n";
    const PartialGraph g = parse_fact_block(text);
    ASSERT_EQ(g.edges.size(), 2u);
    ASSERT_EQ(g.entities.size(), 2u);
    EXPECT_EQ(g.entities[0].name, "Ada");
    EXPECT_EQ(g.entities[1].name, "Engineer");
    EXPECT_EQ(g.edges[0].object_entity, std::optional<std::size_t>(1));
    EXPECT_FALSE(g.edges[0].interval.end.known());
    EXPECT_TRUE(g.edges[1].exclusive);
    EXPECT_FALSE(g.edges[1].object_entity.has_value());
    EXPECT_FALSE(g.edges[1].interval.start.known());
    EXPECT_EQ(std::get<std::string>(g.edges[1].properties.at("source")), "registry");
}

TEST(FactBlock, EmptyWithoutRecordsAndRejectsMalformed) {
    EXPECT_TRUE(parse_fact_block("No facts here.").empty());
    EXPECT_THROW(parse_fact_block("FACT|Person|Ada|works as"), OracleFormatError);
    EXPECT_THROW(parse_fact_block("FACT|Person|Ada|works as|Job|X|2001-13-01||false"), OracleFormatError);
    EXPECT_THROW(parse_fact_block("FACT|Person|Ada|works as|Job|X|2005-01-01|2001-01-01|false"), OracleFormatError);
    EXPECT_THROW(parse_fact_block("FACT|Person||works as|Job|X|||false"), OracleFormatError);
    EXPECT_THROW(parse_fact_block("FACT|Person|Ada|works as|Job|X|||maybe"), OracleFormatError);
}

TEST(DeterministicOracle, ExtractPartialKgUsesFactBlock) {
    const auto oracle = make();
    Document d{"d1", "t", "FACT|Person|Ada|works as|Job|Engineer|||false\nFACT|Person|Bob|works as|Job|Pilot|||false",
               Timestamp::unknown(), 1.0};
    EXPECT_EQ(oracle.extract_partial_kg(d).edges.size(), 2u);
    d.text = " ";
    EXPECT_THROW(oracle.extract_partial_kg(d), ValidationError);
}

TEST(RenderCandidate, UsesPercentAndContextFormat) {
    Entity e = test::entity("Person", "Ada", "mathematician");
    PropertyCandidate c;
    c.value = "1815";
    c.confidence = 0.7;
    c.context = "doc-1";
    e.properties["birth year"] = CandidateSet{c};
    e.properties["nationality"] = std::string("British");
    EXPECT_EQ(render_candidate(3, e), "ent_3: (Person: Ada, desc: \"mathematician\", props: {birth year: [1815 (70%, "
                                      "ctx:\"doc-1\")], nationality: [British]})");
}

TEST(DeterministicOracle, JudgeAnswer) {
    const auto oracle = make();
    EXPECT_FALSE(oracle.judge_answer("Which team?", {}).answered);
    const std::vector<std::string> paths = {"Messi plays for Barcelona from 2004-01-01 to 2021-08-05 => Team: Barcelona"};
    const Judgement j = oracle.judge_answer("Which team did Messi play for in 2010?", paths);
    EXPECT_TRUE(j.answered);
    EXPECT_EQ(j.answer, "Barcelona");
    EXPECT_FALSE(oracle.judge_answer("Which award did Messi win?", paths).answered);
    EXPECT_FALSE(oracle.judge_answer("Did Barcelona play for a team?", paths).answered);
    EXPECT_TRUE(oracle.judge_answer("Which teams did Messi play for?", paths).answered);
    EXPECT_FALSE(oracle.judge_answer("Which team is Barcelona?", paths).answered);
    EXPECT_TRUE(oracle.judge_answer("Who coached it?", {" => Person: Pep"}).answered);
}

TEST(TemporalExpressions, FindsYearsAndDatesInOrder) {
    EXPECT_EQ(find_temporal_expressions("from 2001-02-03 until March 2005 and 1999"),
              (std::vector<std::string>{"2001-02-03", "March 2005", "1999"}));
    EXPECT_EQ(find_temporal_expressions("on 3 March 1999"), (std::vector<std::string>{"3 March 1999"}));
    EXPECT_TRUE(find_temporal_expressions("room 42 and 12345").empty());
}

TEST(OracleConfig, Validation) {
    OracleConfig c;
    EXPECT_NO_THROW(c.validate());
    c.backend = OracleConfig::Backend::remote;
    EXPECT_THROW(c.validate(), ConfigError);
    c.endpoint_url = "http://x";
    c.model_name = "m";
    EXPECT_NO_THROW(c.validate());
    c.temperature = -1;
    EXPECT_THROW(c.validate(), ConfigError);
}
