#include "tkg/fixtures.hpp"

#include "tkg/error.hpp"
#include "tkg/evolve.hpp"
#include "tkg/json_io.hpp"
#include "tkg/snapshot.hpp"
#include "tkg/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace tkg {

std::uint64_t Rng::below(std::uint64_t bound) {
    if (bound == 0) {
        throw ValidationError("Rng::below needs a positive bound");
    }
    // Rejection sampling keeps the draw unbiased and portable.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % bound;
}

std::int64_t Rng::between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
}

double Rng::unit() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

void WorldSpec::validate() const {
    if (n_entities < 6 || n_entities > 80) {
        throw ValidationError("world n_entities must lie in [6, 80]");
    }
    if (n_relations < 1) {
        throw ValidationError("world n_relations must be >= 1");
    }
    if (exclusive_fraction < 0.0 || exclusive_fraction > 1.0) {
        throw ValidationError("world exclusive_fraction must lie in [0,1]");
    }
    if (removal_fraction < 0.0 || removal_fraction >= 1.0) {
        throw ValidationError("world removal_fraction must lie in [0,1)");
    }
    if (noise_rate < 0.0 || noise_rate >= 1.0) {
        throw ValidationError("world noise_rate must lie in [0,1)");
    }
    if (!span_start.known() || !span_end.known() || span_end.year() - span_start.year() < 8) {
        throw ValidationError("world time span must be known and cover at least 8 years");
    }
    if (n_questions < 1 || max_attempts < 1) {
        throw ValidationError("world n_questions and max_attempts must be >= 1");
    }
}

WorldSpec world_spec_from_json(const nlohmann::json& j) {
    WorldSpec s;
    s.seed = j.value("seed", s.seed);
    s.n_entities = j.value("n_entities", s.n_entities);
    s.n_relations = j.value("n_relations", s.n_relations);
    s.exclusive_fraction = j.value("exclusive_fraction", s.exclusive_fraction);
    if (j.contains("time_span")) {
        const auto& span = j.at("time_span");
        if (!span.is_array() || span.size() != 2) {
            throw ValidationError("time_span must be [start, end]");
        }
        s.span_start = timestamp_from_json(span[0]);
        s.span_end = timestamp_from_json(span[1]);
    }
    s.removal_fraction = j.value("removal_fraction", s.removal_fraction);
    s.noise_rate = j.value("noise_rate", s.noise_rate);
    s.n_questions = j.value("n_questions", s.n_questions);
    s.max_attempts = j.value("max_attempts", s.max_attempts);
    s.validate();
    return s;
}

nlohmann::json world_spec_to_json(const WorldSpec& s) {
    return {{"seed", s.seed},
            {"n_entities", s.n_entities},
            {"n_relations", s.n_relations},
            {"exclusive_fraction", s.exclusive_fraction},
            {"time_span", {timestamp_to_json(s.span_start), timestamp_to_json(s.span_end)}},
            {"removal_fraction", s.removal_fraction},
            {"noise_rate", s.noise_rate},
            {"n_questions", s.n_questions},
            {"max_attempts", s.max_attempts}};
}

namespace {

// Disjoint word pools so that names of different entities share no token.
const std::vector<std::string> kFirstNames = {
    "Mara", "Tobin", "Elsa", "Corin", "Dalia", "Fenn", "Greta", "Hollis", "Ines", "Jasper",
    "Kira", "Lucan", "Mirela", "Nico", "Orla", "Pavel", "Quinn", "Rosalind", "Soren", "Talia",
    "Ulric", "Vera", "Wendell", "Xenia", "Yorick", "Zelda", "Anselm", "Brisa", "Cyrus", "Delphine"};
const std::vector<std::string> kLastNames = {
    "Quill", "Ashdown", "Brightwater", "Calloway", "Dunmore", "Everly", "Fairbanks", "Galloway", "Hartwell",
    "Ivers", "Jolliffe", "Kestrel", "Lindqvist", "Marchetti", "Northcote", "Okonkwo", "Pennington",
    "Radcliffe", "Sandoval", "Thorne", "Underhill", "Valmont", "Whitlock", "Yarrow", "Zabini", "Abernathy",
    "Blackwood", "Cardenas", "Delacroix", "Ellsworth"};
const std::vector<std::string> kMovieAdjectives = {
    "Silent", "Crimson", "Hollow", "Distant", "Broken", "Velvet", "Frozen", "Hidden", "Restless", "Amber",
    "Shattered", "Wandering", "Midnight", "Burning", "Gilded", "Forgotten", "Savage", "Luminous", "Crooked",
    "Endless", "Bitter", "Scarlet", "Drowned", "Painted", "Iron", "Electric", "Phantom", "Silver", "Lonely",
    "Quiet"};
const std::vector<std::string> kMovieNouns = {
    "Harbor", "Orchard", "Lantern", "Meridian", "Cathedral", "Frontier", "Labyrinth", "Tide", "Covenant",
    "Monsoon", "Carousel", "Echo", "Glacier", "Verdict", "Paradox", "Reverie", "Citadel", "Requiem",
    "Mirage", "Tempest", "Pilgrim", "Canyon", "Sonata", "Horizon", "Ember", "Archive", "Vigil", "Eclipse",
    "Garden", "Signal"};
const std::vector<std::string> kTeamCities = {
    "Riverton", "Ashford", "Kingsport", "Millbrook", "Stonehaven", "Westmoor", "Larkspur", "Bramblewood",
    "Copperton", "Dunhollow", "Eastvale", "Foxborough", "Glenwick", "Highcliff", "Ironbridge", "Juniper"};
const std::vector<std::string> kTeamAnimals = {
    "Hawks", "Otters", "Wolves", "Stallions", "Herons", "Badgers", "Lynxes", "Falcons",
    "Bison", "Cobras", "Ravens", "Panthers", "Marlins", "Coyotes", "Bulldogs", "Vipers"};
const std::vector<std::string> kAwardAdjectives = {"Golden", "Platinum", "Crystal", "Obsidian", "Sapphire", "Ivory",
                                                   "Bronze", "Jade", "Cobalt", "Onyx", "Topaz", "Pearl"};
const std::vector<std::string> kAwardObjects = {"Reel", "Lens", "Frame", "Spotlight", "Curtain", "Quill",
                                                "Mask", "Torch", "Compass", "Crown", "Laurel", "Star"};

struct RelationDef {
    std::string name;
    std::string subject_type;
    std::string object_type;
    bool exclusive;
};

const std::vector<RelationDef> kNonExclusive = {{"acted in", "Person", "Movie", false},
                                                {"played against", "Team", "Team", false},
                                                {"won award", "Movie", "Award", false},
                                                {"played for", "Person", "Team", false},
                                                {"directed", "Person", "Movie", false}};
const std::vector<RelationDef> kExclusive = {{"birth year", "Person", "Year", true},
                                             {"release year", "Movie", "Year", true},
                                             {"founded in", "Team", "Year", true}};

std::vector<std::string> pair_names(Rng& rng, const std::vector<std::string>& first,
                                    const std::vector<std::string>& second, std::size_t count,
                                    const std::string& suffix = "") {
    std::vector<std::string> a = first;
    std::vector<std::string> b = second;
    rng.shuffle(a);
    rng.shuffle(b);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < count; ++i) {
        names.push_back(a[i] + " " + b[i] + suffix);
    }
    return names;
}

TemporalInterval year_interval(int year) {
    return {Timestamp::from_date(year, 1, 1), Timestamp::from_date(year, 12, 31)};
}

TemporalInterval day_interval(int year, unsigned month, unsigned day) {
    const Timestamp t = Timestamp::from_date(year, month, day);
    return {t, t};
}

PropertyValue truth_slot(const std::string& value, const Timestamp& seen, const EvolutionConfig& evo) {
    PropertyCandidate c;
    c.value = value;
    c.context = "ground truth";
    c.contexts = {"ground truth"};
    c.frequency_count = 1;
    c.last_seen = seen;
    c.source_weight = 1.0;
    c.confidence = candidate_confidence(1.0, 0.0, 1.0, evo.gamma, evo.delta);
    return CandidateSet{c};
}

bool has_edge(const GraphStore& g, const Edge& e) {
    for (const Edge& x : g.find_edges(e.source, e.relation, e.target)) {
        if (x.interval == e.interval) {
            return true;
        }
    }
    return false;
}

std::string fact_line(const GraphStore& g, const Edge& e) {
    const Entity& s = g.entity(e.source);
    const Entity& t = g.entity(e.target);
    auto date = [](const Timestamp& ts) { return ts.known() ? ts.date_label() : std::string(); };
    return "FACT|" + s.type + "|" + s.name + "|" + e.relation + "|" + t.type + "|" + t.name + "|" +
           date(e.interval.start) + "|" + date(e.interval.end) + "|false";
}

std::string exclusive_line(const Entity& e, const std::string& relation, const std::string& value) {
    return "FACT|" + e.type + "|" + e.name + "|" + relation + "|Year|" + value + "|||true";
}

std::string plain_value(const PropertyValue& v) {
    if (const auto* s = std::get_if<std::string>(&v)) {
        return *s;
    }
    return std::get<CandidateSet>(v).front().value;
}

struct CandidateQuestion {
    std::string text;
    std::vector<std::string> gold;
    std::string domain;
    bool recovery = false;
};

AppConfig world_config() {
    AppConfig c;
    // Distinct same-type names still share the rendering template, which puts
    // their hash-embedding cosine near 0.55; alignment needs a stricter bar.
    c.evolution.theta_entity = 0.8;
    c.reasoner.max_depth = 3;
    return c;
}

std::optional<World> attempt(const WorldSpec& spec, std::uint64_t seed) {
    Rng rng(seed);
    World w;
    w.spec = spec;
    w.effective_seed = static_cast<std::int64_t>(seed);
    w.config = world_config();
    const EvolutionConfig& evo = w.config.evolution;

    const std::size_t n = spec.n_entities;
    const std::size_t n_persons = std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(0.35 * n)));
    const std::size_t n_movies = std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(0.30 * n)));
    const std::size_t n_teams = std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(0.20 * n)));
    const std::size_t n_awards = std::max<std::size_t>(1, n - std::min(n - 1, n_persons + n_movies + n_teams));

    const std::size_t n_excl = std::min(
        kExclusive.size(), static_cast<std::size_t>(std::lround(spec.exclusive_fraction * spec.n_relations)));
    const std::size_t n_non = std::min(kNonExclusive.size(), spec.n_relations - std::min(spec.n_relations, n_excl));
    if (n_non == 0) {
        throw ValidationError("world needs at least one non-exclusive relation");
    }
    std::set<std::string> active;
    GraphStore& g = w.truth;
    for (std::size_t i = 0; i < n_non; ++i) {
        const auto& r = kNonExclusive[i];
        g.register_schema({r.subject_type, r.name, r.object_type, false});
        active.insert(r.name);
    }
    for (std::size_t i = 0; i < n_excl; ++i) {
        const auto& r = kExclusive[i];
        g.register_schema({r.subject_type, r.name, r.object_type, true});
        active.insert(r.name);
    }

    auto add = [&](const std::string& type, const std::string& name) {
        Entity e;
        e.type = type;
        e.name = name;
        return g.upsert_entity(std::move(e));
    };
    std::vector<EntityId> persons, movies, teams, awards;
    for (const auto& name : pair_names(rng, kFirstNames, kLastNames, n_persons)) {
        persons.push_back(add("Person", name));
    }
    for (const auto& name : pair_names(rng, kMovieAdjectives, kMovieNouns, n_movies)) {
        movies.push_back(add("Movie", name));
    }
    for (const auto& name : pair_names(rng, kTeamCities, kTeamAnimals, n_teams)) {
        teams.push_back(add("Team", name));
    }
    for (const auto& name : pair_names(rng, kAwardAdjectives, kAwardObjects, n_awards, " Award")) {
        awards.push_back(add("Award", name));
    }

    const int y0 = spec.span_start.year();
    const int y1 = spec.span_end.year();
    auto insert = [&](const EntityId& s, const std::string& rel, const EntityId& t, const TemporalInterval& iv) {
        if (!active.contains(rel) || s == t) {
            return;
        }
        Edge e;
        e.source = s;
        e.relation = rel;
        e.target = t;
        e.interval = iv;
        if (!has_edge(g, e)) {
            g.insert_edge(std::move(e));
        }
    };

    std::map<EntityId, int> release;
    for (const auto& m : movies) {
        const int year = static_cast<int>(rng.between(y0 + 3, y1 - 1));
        release[m] = year;
        std::vector<EntityId> cast = persons;
        rng.shuffle(cast);
        const std::size_t n_cast = std::min<std::size_t>(cast.size() - 1, 2);
        for (std::size_t i = 0; i < n_cast; ++i) {
            insert(cast[i], "acted in", m, year_interval(year));
        }
        insert(cast.back(), "directed", m, year_interval(year));
        if (rng.unit() < 0.7) {
            insert(m, "won award", awards[rng.below(awards.size())], day_interval(year + 1, 3, 15));
        }
        if (active.contains("release year")) {
            g.mutable_entity(m).properties["release year"] = truth_slot(std::to_string(year), spec.span_end, evo);
        }
    }
    for (const auto& p : persons) {
        if (rng.unit() < 0.5) {
            const int start = static_cast<int>(rng.between(y0, y1 - 4));
            const int end = start + static_cast<int>(rng.between(0, 3));
            insert(p, "played for", teams[rng.below(teams.size())],
                   {Timestamp::from_date(start, 1, 1), Timestamp::from_date(end, 12, 31)});
        }
        if (active.contains("birth year")) {
            g.mutable_entity(p).properties["birth year"] =
                truth_slot(std::to_string(rng.between(y0 - 50, y0 - 18)), spec.span_end, evo);
        }
    }
    for (const auto& t : teams) {
        for (int match = 0; match < 2; ++match) {
            const EntityId& other = teams[rng.below(teams.size())];
            const int year = static_cast<int>(rng.between(y0, y1));
            insert(t, "played against", other,
                   day_interval(year, static_cast<unsigned>(rng.between(1, 12)), static_cast<unsigned>(rng.between(1, 28))));
        }
        if (active.contains("founded in")) {
            g.mutable_entity(t).properties["founded in"] =
                truth_slot(std::to_string(rng.between(y0 - 110, y0 - 10)), spec.span_end, evo);
        }
    }
    g.audit();

    // Degrade: drop a share of people and movies with their incident edges.
    std::vector<EntityId> removable = persons;
    removable.insert(removable.end(), movies.begin(), movies.end());
    rng.shuffle(removable);
    const auto n_remove = static_cast<std::size_t>(std::lround(spec.removal_fraction * removable.size()));
    removable.resize(std::min(n_remove, removable.size()));
    std::sort(removable.begin(), removable.end());
    w.removed = removable;
    w.degraded = g;
    for (const auto& id : removable) {
        w.degraded.remove_entity(id);
    }
    w.degraded.set_revision(g.revision());
    const std::set<EntityId> removed(removable.begin(), removable.end());
    auto edge_removed = [&](const Edge& e) { return removed.contains(e.source) || removed.contains(e.target); };

    // Documents restating every removed fact.
    struct Draft {
        std::string title;
        std::string text;
    };
    std::vector<Draft> drafts;
    std::vector<std::pair<EntityId, std::string>> slots;
    const std::size_t profile_copies = 3;
    for (const auto& id : removable) {
        const Entity& e = g.entity(id);
        std::vector<std::string> lines;
        for (const auto& [key, value] : e.properties) {
            lines.push_back(exclusive_line(e, key, plain_value(value)));
            slots.emplace_back(id, key);
        }
        if (!lines.empty()) {
            for (std::size_t c = 0; c < profile_copies; ++c) {
                drafts.push_back({"Profile of " + e.name, "Profile of " + e.name + ".\n" + join(lines, "\n")});
            }
        }
        std::vector<EdgeId> incident = g.out_edge_ids(id);
        const auto in = g.in_edge_ids(id);
        incident.insert(incident.end(), in.begin(), in.end());
        std::sort(incident.begin(), incident.end());
        incident.erase(std::unique(incident.begin(), incident.end()), incident.end());
        for (std::size_t i = 0; i < incident.size(); i += 3) {
            std::vector<std::string> facts;
            for (std::size_t j = i; j < std::min(incident.size(), i + 3); ++j) {
                facts.push_back(fact_line(g, g.edge(incident[j])));
            }
            drafts.push_back({"Report on " + e.name, "Report on " + e.name + ".\n" + join(facts, "\n")});
        }
    }
    // Minority contradicting values: at most one per slot, so each slot keeps
    // a 3-to-1 majority for the true value.
    if (!drafts.empty() && !slots.empty() && spec.noise_rate > 0.0) {
        const double wanted = spec.noise_rate / (1.0 - spec.noise_rate) * static_cast<double>(drafts.size());
        const std::size_t n_noise = std::min(slots.size(), static_cast<std::size_t>(std::lround(wanted)));
        rng.shuffle(slots);
        for (std::size_t i = 0; i < n_noise; ++i) {
            const Entity& e = g.entity(slots[i].first);
            const int truth = std::stoi(plain_value(e.properties.at(slots[i].second)));
            const int offset = static_cast<int>(rng.between(1, 5)) * (rng.unit() < 0.5 ? -1 : 1);
            drafts.push_back({"Profile of " + e.name, "Profile of " + e.name + ".\n" +
                                                          exclusive_line(e, slots[i].second,
                                                                         std::to_string(truth + offset))});
        }
    }
    rng.shuffle(drafts);
    for (std::size_t i = 0; i < drafts.size(); ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "doc-%04zu", i + 1);
        w.corpus.push_back({id, drafts[i].title, drafts[i].text, spec.span_end, 1.0});
    }

    // Candidate questions with every gold answer derivable from the truth graph.
    std::vector<CandidateQuestion> candidates;
    std::set<std::string> seen;
    auto name = [&](const EntityId& id) { return g.entity(id).name; };
    auto targets = [&](const EntityId& s, const std::string& rel, int year, std::vector<Edge>* used) {
        std::vector<std::string> out;
        for (const Edge& e : g.find_edges(s, rel)) {
            if (e.interval.start.known() && e.interval.start.year() == year) {
                out.push_back(name(e.target));
                if (used) {
                    used->push_back(e);
                }
            }
        }
        return out;
    };
    auto push = [&](std::string text, std::vector<std::string> gold, const std::string& domain,
                    const std::vector<Edge>& used) {
        if (gold.empty() || !seen.insert(text).second) {
            return;
        }
        std::sort(gold.begin(), gold.end());
        gold.erase(std::unique(gold.begin(), gold.end()), gold.end());
        const bool recovery = std::any_of(used.begin(), used.end(), edge_removed);
        candidates.push_back({std::move(text), std::move(gold), domain, recovery});
    };
    for (const auto& [id, e] : g.edges()) {
        const int year = e.interval.start.year();
        const std::string y = std::to_string(year);
        std::vector<Edge> used;
        if (e.relation == "acted in") {
            auto gold = targets(e.source, e.relation, year, &used);
            push("Which movie has " + name(e.source) + " acted in during " + y + "?", gold, "movies", used);
            // Two hops: the awards won by those movies.
            std::vector<std::string> awards_won;
            std::vector<Edge> used2 = used;
            for (const Edge& acted : used) {
                for (const Edge& won : g.find_edges(acted.target, std::string("won award"))) {
                    awards_won.push_back(name(won.target));
                    used2.push_back(won);
                }
            }
            push("Which award has the movie that " + name(e.source) + " acted in during " + y + " won?", awards_won,
                 "movies", used2);
        } else if (e.relation == "directed") {
            auto gold = targets(e.source, e.relation, year, &used);
            push("Which movie has " + name(e.source) + " directed in " + y + "?", gold, "movies", used);
        } else if (e.relation == "won award") {
            auto gold = targets(e.source, e.relation, year, &used);
            push("Which award has " + name(e.source) + " won in " + y + "?", gold, "movies", used);
        } else if (e.relation == "played for") {
            auto gold = targets(e.source, e.relation, year, &used);
            push("Which team has " + name(e.source) + " played for in " + y + "?", gold, "sports", used);
        } else if (e.relation == "played against") {
            auto gold = targets(e.source, e.relation, year, &used);
            push("Which team has " + name(e.source) + " played against in " + y + "?", gold, "sports", used);
        }
    }
    rng.shuffle(candidates);

    // Keep only questions the deterministic stack answers correctly on the truth graph.
    const auto encoder = make_encoder(w.config.embedding);
    const DeterministicOracle oracle(encoder);
    const EmbeddingIndex index = build_entity_index(g, *encoder);
    const Reasoner reasoner(g, index, *encoder, oracle, w.config.reasoner);
    auto sound = [&](const CandidateQuestion& c) {
        try {
            return is_correct(reasoner.answer(c.text, spec.span_end).value, c.gold);
        } catch (const NoAnswerError&) {
            return false;
        }
    };
    std::vector<const CandidateQuestion*> chosen;
    const std::size_t recovery_quota = removable.empty() ? 0 : (spec.n_questions + 1) / 2;
    std::vector<bool> taken(candidates.size(), false);
    for (std::size_t pass = 0; pass < 2; ++pass) {
        for (std::size_t i = 0; i < candidates.size() && chosen.size() < spec.n_questions; ++i) {
            if (taken[i]) {
                continue;
            }
            const std::size_t recovery_taken = static_cast<std::size_t>(std::count_if(
                chosen.begin(), chosen.end(), [](const CandidateQuestion* q) { return q->recovery; }));
            if (pass == 0 && (!candidates[i].recovery || recovery_taken >= recovery_quota)) {
                continue;
            }
            if (sound(candidates[i])) {
                chosen.push_back(&candidates[i]);
            }
            taken[i] = true;
        }
    }
    const bool has_recovery =
        std::any_of(chosen.begin(), chosen.end(), [](const CandidateQuestion* q) { return q->recovery; });
    if (chosen.empty() || (!removable.empty() && !has_recovery)) {
        return std::nullopt;
    }
    for (std::size_t i = 0; i < chosen.size(); ++i) {
        char id[24];
        std::snprintf(id, sizeof id, "q%03zu", i + 1);
        QAItem item;
        item.id = id;
        item.question = chosen[i]->text;
        item.query_time = spec.span_end;
        item.gold_answers = chosen[i]->gold;
        item.domain = chosen[i]->domain;
        if (chosen[i]->recovery) {
            item.tags.push_back(kRecoveryTag);
        }
        w.questions.push_back(std::move(item));
    }
    return w;
}

} // namespace

World generate_world(const WorldSpec& spec) {
    spec.validate();
    std::uint64_t seed = static_cast<std::uint64_t>(spec.seed);
    for (std::size_t i = 0; i < spec.max_attempts; ++i) {
        if (auto world = attempt(spec, seed)) {
            return std::move(*world);
        }
        seed += 0x9E3779B97F4A7C15ULL;
    }
    throw ValidationError("no feasible world after " + std::to_string(spec.max_attempts) + " attempts");
}

void write_world(const World& world, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    snapshot_save(world.truth, dir / "truth.jsonl");
    snapshot_save(world.degraded, dir / "degraded.jsonl");
    auto open = [&](const char* name) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) {
            throw ValidationError("cannot write " + (dir / name).string());
        }
        return out;
    };
    {
        auto out = open("corpus.jsonl");
        save_corpus(world.corpus, out);
    }
    {
        auto out = open("qa.jsonl");
        save_dataset(world.questions, out);
    }
    {
        auto out = open("config.json");
        out << config_to_json(world.config).dump(2) << '\n';
    }
    {
        auto out = open("world.json");
        out << nlohmann::json{{"spec", world_spec_to_json(world.spec)},
                              {"effective_seed", world.effective_seed},
                              {"removed", world.removed},
                              {"documents", world.corpus.size()},
                              {"questions", world.questions.size()}}
                   .dump(2)
            << '\n';
    }
}

} // namespace tkg
