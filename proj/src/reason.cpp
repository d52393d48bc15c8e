#include "tkg/reason.hpp"

#include "tkg/error.hpp"
#include "tkg/json_io.hpp"
#include "tkg/text.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

namespace tkg {

void ReasonerConfig::validate() const {
    if (n_routes < 1 || k_candidates < 1 || k_anchors < 1 || beam_width < 1 || default_hops < 1 ||
        consensus_min < 1) {
        throw ConfigError("reasoner n_routes, k_candidates, k_anchors, beam_width, default_hops and "
                          "consensus_min must be >= 1");
    }
    if (!(dedup_threshold > 0.0 && dedup_threshold <= 1.0)) {
        throw ConfigError("reasoner dedup_threshold must lie in (0,1]");
    }
}

double route_cost(const std::vector<std::string>& route, const std::vector<SubgoalEstimate>& estimates) {
    if (route.size() != estimates.size()) {
        throw ValidationError("route has " + std::to_string(route.size()) + " subgoals but " +
                              std::to_string(estimates.size()) + " estimates");
    }
    double cost = 0.0;
    for (const auto& e : estimates) {
        cost += std::pow(static_cast<double>(e.b) * static_cast<double>(e.n), static_cast<double>(e.h));
    }
    return cost;
}

double score_path(const ReasoningPath& path) {
    auto check = [](double v, const char* what) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ValidationError(std::string(what) + " " + std::to_string(v) + " outside [0,1]");
        }
    };
    check(path.anchor_score, "anchor score");
    double conf = path.anchor_score;
    for (const Hop& hop : path.hops) {
        check(hop.relation_score, "relation score");
        check(hop.triplet_score, "triplet score");
        conf *= hop.relation_score * hop.triplet_score;
    }
    return conf;
}

std::string verbalize_triplet(const std::string& source_name, const std::string& relation,
                              const std::string& target_name, const TemporalInterval& interval) {
    return source_name + " " + relation + " " + target_name + " from " + interval.start.date_label() + " to " +
           interval.end.date_label();
}

std::vector<RouteChoice> select_routes(const RoutePlan& plan, const std::vector<std::vector<SubgoalEstimate>>& estimates,
                                       const Encoder& encoder, const ReasonerConfig& config) {
    config.validate();
    if (plan.routes.size() != estimates.size()) {
        throw ValidationError("route plan and estimates differ in length");
    }
    std::vector<RouteChoice> ranked;
    for (std::size_t i = 0; i < plan.routes.size(); ++i) {
        ranked.push_back({i, plan.routes[i], route_cost(plan.routes[i], estimates[i])});
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const RouteChoice& a, const RouteChoice& b) { return a.cost < b.cost; });

    std::vector<RouteChoice> kept;
    std::vector<Vector> kept_vectors;
    for (auto& choice : ranked) {
        if (kept.size() == config.n_routes) {
            break;
        }
        Vector v = encoder.encode(join(choice.subgoals, " "));
        const bool duplicate = std::any_of(kept_vectors.begin(), kept_vectors.end(), [&](const Vector& k) {
            return cosine_sim(k, v) > config.dedup_threshold;
        });
        if (!duplicate) {
            kept.push_back(std::move(choice));
            kept_vectors.push_back(std::move(v));
        }
    }
    return kept;
}

Answer answer_by_voting(const std::vector<std::vector<ReasoningPath>>& paths_per_route, const AnswerOf& answer_of) {
    struct Group {
        double mass = 0.0;
        double best = -1.0;
        std::string display;
    };
    std::map<std::string, Group> groups;
    for (const auto& route : paths_per_route) {
        for (const auto& path : route) {
            const std::string raw = answer_of(path);
            Group& g = groups[normalize_answer(raw)];
            g.mass += path.confidence;
            if (path.confidence > g.best) {
                g.best = path.confidence;
                g.display = raw;
            }
        }
    }
    if (groups.empty()) {
        throw NoAnswerError("no reasoning paths to vote over");
    }
    // std::map iterates keys in ascending order, so strict comparisons keep
    // the lexicographically smaller answer on a full tie.
    auto winner = groups.begin();
    for (auto it = std::next(groups.begin()); it != groups.end(); ++it) {
        const Group& a = it->second;
        const Group& w = winner->second;
        if (a.mass > w.mass || (a.mass == w.mass && a.best > w.best)) {
            winner = it;
        }
    }
    Answer answer;
    answer.value = winner->second.display;
    for (std::size_t r = 0; r < paths_per_route.size(); ++r) {
        for (const auto& path : paths_per_route[r]) {
            if (normalize_answer(answer_of(path)) == winner->first) {
                answer.confidence_mass += path.confidence;
                answer.route_votes[r] += path.confidence;
                answer.supporting_paths.push_back(path);
            }
        }
    }
    return answer;
}

void CountingOracle::tick() const {
    const std::size_t n = ++calls_;
    if (budget_ != 0 && n > budget_) {
        throw Error("oracle call budget of " + std::to_string(budget_) + " exhausted");
    }
}

RoutePlan CountingOracle::plan_routes(const std::string& question, const Timestamp& query_time,
                                      std::size_t n_routes) const {
    tick();
    return inner_.plan_routes(question, query_time, n_routes);
}

MentionAnalysis CountingOracle::extract_mentions(const std::string& question, const Timestamp& query_time,
                                                 const std::vector<std::string>& route) const {
    tick();
    return inner_.extract_mentions(question, query_time, route);
}

RelevanceScores CountingOracle::score_entities(const std::string& question, const Timestamp& query_time,
                                               const std::vector<std::string>& route,
                                               const std::vector<std::string>& candidates) const {
    tick();
    return inner_.score_entities(question, query_time, route, candidates);
}

std::map<std::string, double> CountingOracle::score_relations(const std::string& question,
                                                              const std::vector<std::string>& subgoals,
                                                              const std::vector<RelationCount>& relations) const {
    tick();
    return inner_.score_relations(question, subgoals, relations);
}

double CountingOracle::align_score(const std::string& candidate_rendering, const std::string& kg_rendering) const {
    tick();
    return inner_.align_score(candidate_rendering, kg_rendering);
}

PartialGraph CountingOracle::extract_partial_kg(const Document& document) const {
    tick();
    return inner_.extract_partial_kg(document);
}

Judgement CountingOracle::judge_answer(const std::string& question, const std::vector<std::string>& paths) const {
    tick();
    return inner_.judge_answer(question, paths);
}

Reasoner::Reasoner(const GraphStore& store, const EmbeddingIndex& entity_index, const Encoder& encoder,
                   const Oracle& oracle, ReasonerConfig config)
    : store_(store), index_(entity_index), encoder_(encoder), oracle_(oracle), config_(std::move(config)) {
    config_.validate();
}

namespace {

std::uint64_t ceil_mean(std::uint64_t total, std::size_t count) {
    return count == 0 ? 1 : std::max<std::uint64_t>(1, (total + count - 1) / count);
}

std::uint64_t ceil_median(std::vector<std::uint64_t> values) {
    if (values.empty()) {
        return 1;
    }
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    const std::uint64_t median =
        values.size() % 2 == 1 ? values[mid] : (values[mid - 1] + values[mid] + 1) / 2;
    return std::max<std::uint64_t>(1, median);
}

double clamp01(double v) {
    return std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
}

nlohmann::json path_json(const ReasoningPath& path) {
    nlohmann::json hops = nlohmann::json::array();
    for (const Hop& h : path.hops) {
        hops.push_back({{"relation", h.relation},
                        {"s_rel", h.relation_score},
                        {"target", h.target},
                        {"s_triplet", h.triplet_score},
                        {"edge", h.edge},
                        {"interval", interval_to_json(h.interval)}});
    }
    return {{"anchor", path.anchor}, {"s_init", path.anchor_score}, {"hops", hops}, {"confidence", path.confidence}};
}

template <typename E>
[[noreturn]] void rethrow_with_route(const E& e, std::size_t route) {
    throw E("route " + std::to_string(route) + ": " + e.what());
}

} // namespace

SubgoalEstimate Reasoner::estimate_subgoal(const std::string& subgoal, const std::vector<EntityId>& anchors,
                                           const Timestamp& query_time) const {
    return estimate_with(oracle_, subgoal, anchors, query_time);
}

SubgoalEstimate Reasoner::estimate_with(const Oracle& oracle, const std::string& subgoal,
                                        const std::vector<EntityId>& anchors, const Timestamp& query_time) const {
    if (store_.entities().empty()) {
        return {};
    }
    SubgoalEstimate est;
    std::vector<EntityId> present;
    for (const auto& a : anchors) {
        if (store_.has_entity(a)) {
            present.push_back(a);
        }
    }
    if (!present.empty()) {
        std::uint64_t relations = 0;
        std::uint64_t edges = 0;
        for (const auto& a : present) {
            relations += store_.out_relations(a).size();
            edges += store_.out_edge_ids(a).size();
        }
        est.b = ceil_mean(relations, present.size());
        est.n = ceil_mean(edges, present.size());
    } else {
        std::vector<std::uint64_t> relations;
        std::vector<std::uint64_t> edges;
        for (const auto& [id, _] : store_.entities()) {
            relations.push_back(store_.out_relations(id).size());
            edges.push_back(store_.out_edge_ids(id).size());
        }
        est.b = ceil_median(std::move(relations));
        est.n = ceil_median(std::move(edges));
    }
    const MentionAnalysis mentions = oracle.extract_mentions(subgoal, query_time, {subgoal});
    const std::set<std::string> distinct(mentions.mentions.begin(), mentions.mentions.end());
    est.h = std::clamp<std::uint64_t>(distinct.size(), 1, config_.default_hops);
    return est;
}

std::vector<Anchor> Reasoner::ground_query(const std::string& question, const Timestamp& query_time,
                                           const std::vector<std::string>& route) const {
    return ground_with(oracle_, question, query_time, route);
}

std::vector<Anchor> Reasoner::ground_with(const Oracle& oracle, const std::string& question,
                                          const Timestamp& query_time, const std::vector<std::string>& route) const {
    if (index_.items().empty()) {
        return {};
    }
    const MentionAnalysis analysis = oracle.extract_mentions(question, query_time, route);
    std::map<EntityId, double> best;
    for (std::size_t i = 0; i < analysis.mentions.size(); ++i) {
        const std::string context = i < analysis.temporal_contexts.size() ? analysis.temporal_contexts[i] : "";
        const Vector query = encode_mention_with_time(encoder_, analysis.mentions[i], context);
        std::vector<EntityId> candidates;
        std::vector<std::string> rendered;
        for (const auto& hit : topk(index_, query, config_.k_candidates)) {
            if (store_.has_entity(hit.key)) {
                rendered.push_back(render_candidate(candidates.size(), store_.entity(hit.key)));
                candidates.push_back(hit.key);
            }
        }
        if (candidates.empty()) {
            continue;
        }
        const RelevanceScores relevance = oracle.score_entities(question, query_time, route, rendered);
        std::vector<Anchor> scored;
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            auto it = relevance.scores.find("ent_" + std::to_string(c));
            scored.push_back({candidates[c], it == relevance.scores.end() ? 0.0 : clamp01(it->second)});
        }
        std::stable_sort(scored.begin(), scored.end(),
                         [](const Anchor& a, const Anchor& b) { return a.score > b.score; });
        scored.resize(std::min(scored.size(), config_.k_anchors));
        for (const auto& a : scored) {
            auto [it, inserted] = best.emplace(a.entity, a.score);
            if (!inserted) {
                it->second = std::max(it->second, a.score);
            }
        }
    }
    std::vector<Anchor> anchors;
    for (const auto& [id, score] : best) {
        anchors.push_back({id, score});
    }
    std::stable_sort(anchors.begin(), anchors.end(), [](const Anchor& a, const Anchor& b) { return a.score > b.score; });
    return anchors;
}

std::vector<ReasoningPath> Reasoner::explore_step(const std::vector<ReasoningPath>& frontier,
                                                  const std::string& question,
                                                  const std::vector<std::string>& subgoals) const {
    return step_with(oracle_, frontier, encoder_.encode(question), question, subgoals, nullptr, 0);
}

std::vector<ReasoningPath> Reasoner::step_with(const Oracle& oracle, const std::vector<ReasoningPath>& frontier,
                                               const Vector& question_vector, const std::string& question,
                                               const std::vector<std::string>& subgoals,
                                               std::vector<nlohmann::json>* audit, std::size_t depth) const {
    struct Candidate {
        std::size_t path;
        const Edge* edge;
        double s_rel;
        double s_triplet;
        std::string text;
    };
    std::vector<Candidate> candidates;
    std::deque<std::vector<Edge>> held;  // keeps edges alive for the Candidate pointers
    nlohmann::json selected_relations = nlohmann::json::array();

    for (std::size_t p = 0; p < frontier.size(); ++p) {
        const ReasoningPath& path = frontier[p];
        const EntityId& current = path.terminal();
        if (!store_.has_entity(current)) {
            continue;
        }
        const auto relations = store_.out_relations(current);
        if (relations.empty()) {
            continue;
        }
        const auto scores = oracle.score_relations(question, subgoals, relations);
        std::vector<std::pair<std::string, double>> ranked;
        for (const auto& r : relations) {
            auto it = scores.find(r.relation);
            ranked.emplace_back(r.relation, it == scores.end() ? 0.0 : clamp01(it->second));
        }
        // relations arrive sorted by name, so a stable sort breaks ties by name
        std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
        ranked.resize(std::min(ranked.size(), config_.beam_width));

        std::set<EntityId> visited{path.anchor};
        for (const Hop& h : path.hops) {
            visited.insert(h.target);
        }
        const std::string& source_name = store_.entity(current).name;
        for (const auto& [relation, s_rel] : ranked) {
            selected_relations.push_back({{"path", p}, {"entity", current}, {"relation", relation}, {"s_rel", s_rel}});
            held.push_back(store_.find_edges(current, relation));
            for (const Edge& edge : held.back()) {
                if (visited.contains(edge.target)) {
                    continue;
                }
                std::string text =
                    verbalize_triplet(source_name, edge.relation, store_.entity(edge.target).name, edge.interval);
                const double s_triplet = clamp01(cosine_sim(question_vector, encoder_.encode(text)));
                candidates.push_back({p, &edge, s_rel, s_triplet, std::move(text)});
            }
        }
    }

    std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.s_triplet != b.s_triplet) {
            return a.s_triplet > b.s_triplet;
        }
        if (a.path != b.path) {
            return a.path < b.path;
        }
        return a.edge->id < b.edge->id;
    });
    candidates.resize(std::min(candidates.size(), config_.beam_width));

    std::vector<ReasoningPath> next;
    nlohmann::json kept = nlohmann::json::array();
    for (const Candidate& c : candidates) {
        ReasoningPath extended = frontier[c.path];
        extended.hops.push_back({c.edge->relation, c.s_rel, c.edge->target, c.s_triplet, c.edge->interval, c.edge->id});
        extended.confidence = score_path(extended);
        kept.push_back({{"triplet", c.text}, {"s_triplet", c.s_triplet}, {"edge", c.edge->id}});
        next.push_back(std::move(extended));
    }
    if (audit) {
        audit->push_back({{"stage", "explore"},
                          {"depth", depth},
                          {"selected_relations", selected_relations},
                          {"triplets", kept}});
    }
    return next;
}

std::string Reasoner::verbalize_path(const ReasoningPath& path) const {
    std::vector<std::string> triplets;
    EntityId source = path.anchor;
    for (const Hop& hop : path.hops) {
        triplets.push_back(
            verbalize_triplet(store_.entity(source).name, hop.relation, store_.entity(hop.target).name, hop.interval));
        source = hop.target;
    }
    const Entity& terminal = store_.entity(path.terminal());
    return join(triplets, "; ") + std::string(kPathTerminalMarker) + terminal.type + ": " + terminal.name;
}

std::string Reasoner::answer_of(const ReasoningPath& path) const {
    return store_.entity(path.terminal()).name;
}

ExplorationResult Reasoner::explore_route(const std::vector<std::string>& route, const std::vector<Anchor>& anchors,
                                          const std::string& question, std::vector<nlohmann::json>* audit) const {
    return explore_with(oracle_, route, anchors, question, audit);
}

ExplorationResult Reasoner::explore_with(const Oracle& oracle, const std::vector<std::string>& route,
                                         const std::vector<Anchor>& anchors, const std::string& question,
                                         std::vector<nlohmann::json>* audit) const {
    if (anchors.empty()) {
        throw PreconditionError("explore_route requires at least one anchor");
    }
    const std::vector<std::string> subgoals = route.empty() ? std::vector<std::string>{question} : route;
    const Vector question_vector = encoder_.encode(question);

    ExplorationResult result;
    std::vector<ReasoningPath> frontier;
    for (const Anchor& a : anchors) {
        ReasoningPath p;
        p.anchor = a.entity;
        p.anchor_score = clamp01(a.score);
        p.confidence = score_path(p);
        frontier.push_back(std::move(p));
    }
    result.all_paths = frontier;

    auto judge = [&](std::size_t depth) {
        std::vector<std::size_t> order(frontier.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            order[i] = i;
        }
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return frontier[a].confidence > frontier[b].confidence;
        });
        std::vector<std::string> verbalized;
        for (std::size_t i : order) {
            verbalized.push_back(verbalize_path(frontier[i]));
        }
        const Judgement j = oracle.judge_answer(question, verbalized);
        if (audit) {
            audit->push_back({{"stage", "judge"}, {"depth", depth}, {"answered", j.answered}, {"answer", j.answer}});
        }
        return j;
    };

    Judgement verdict = judge(0);
    for (std::size_t depth = 1; !verdict.answered && depth <= config_.max_depth; ++depth) {
        auto next = step_with(oracle, frontier, question_vector, question, subgoals, audit, depth);
        if (next.empty()) {
            break;
        }
        frontier = std::move(next);
        result.all_paths.insert(result.all_paths.end(), frontier.begin(), frontier.end());
        result.depth_reached = depth;
        verdict = judge(depth);
    }
    result.answered = verdict.answered;
    result.judged_answer = verdict.answer;

    if (verdict.answered) {
        // Keep the candidates of the same kind as the judged answer.
        const std::string wanted = normalize_answer(verdict.answer);
        std::optional<std::string> type;
        for (const auto& p : frontier) {
            if (normalize_answer(answer_of(p)) == wanted) {
                type = store_.entity(p.terminal()).type;
                break;
            }
        }
        if (type) {
            std::erase_if(frontier, [&](const ReasoningPath& p) { return store_.entity(p.terminal()).type != *type; });
        }
    }
    result.paths = std::move(frontier);
    return result;
}

Answer Reasoner::answer(const std::string& question, const Timestamp& query_time) const {
    CountingOracle oracle(oracle_, config_.oracle_budget);
    std::vector<nlohmann::json> audit;

    RoutePlan plan = oracle.plan_routes(question, query_time, config_.n_routes);
    if (plan.routes.empty()) {
        plan.routes.push_back({question});
    }
    for (auto& route : plan.routes) {
        if (route.empty()) {
            route.push_back(question);
        }
    }

    std::vector<std::vector<Anchor>> anchors;
    std::vector<std::vector<SubgoalEstimate>> estimates;
    for (std::size_t r = 0; r < plan.routes.size(); ++r) {
        try {
            anchors.push_back(ground_with(oracle, question, query_time, plan.routes[r]));
            std::vector<EntityId> ids;
            for (const auto& a : anchors.back()) {
                ids.push_back(a.entity);
            }
            std::vector<SubgoalEstimate> per_subgoal;
            for (const auto& subgoal : plan.routes[r]) {
                per_subgoal.push_back(estimate_with(oracle, subgoal, ids, query_time));
            }
            estimates.push_back(std::move(per_subgoal));
        } catch (const TransportError& e) {
            rethrow_with_route(e, r);
        } catch (const OracleFormatError& e) {
            rethrow_with_route(e, r);
        }
    }

    const auto chosen = select_routes(plan, estimates, encoder_, config_);
    for (const auto& c : chosen) {
        nlohmann::json anchor_list = nlohmann::json::array();
        for (const auto& a : anchors[c.index]) {
            anchor_list.push_back({{"entity", a.entity}, {"s_init", a.score}});
        }
        audit.push_back({{"stage", "route"},
                         {"route", c.index},
                         {"subgoals", c.subgoals},
                         {"cost", c.cost},
                         {"anchors", anchor_list}});
    }

    std::vector<std::vector<ReasoningPath>> executed;
    std::vector<std::size_t> executed_index;
    std::map<std::string, std::size_t> agreement;
    for (const auto& c : chosen) {
        if (anchors[c.index].empty()) {
            continue;
        }
        ExplorationResult explored;
        try {
            audit.push_back({{"stage", "explore_route"}, {"route", c.index}});
            explored = explore_with(oracle, c.subgoals, anchors[c.index], question, &audit);
        } catch (const TransportError& e) {
            rethrow_with_route(e, c.index);
        } catch (const OracleFormatError& e) {
            rethrow_with_route(e, c.index);
        }
        if (explored.paths.empty()) {
            continue;
        }
        const Answer local = answer_by_voting({explored.paths}, [this](const ReasoningPath& p) { return answer_of(p); });
        audit.push_back({{"stage", "route_answer"},
                         {"route", c.index},
                         {"depth", explored.depth_reached},
                         {"answered", explored.answered},
                         {"answer", local.value},
                         {"mass", local.confidence_mass}});
        executed.push_back(std::move(explored.paths));
        executed_index.push_back(c.index);
        if (++agreement[normalize_answer(local.value)] >= config_.consensus_min) {
            break;
        }
    }
    if (executed.empty()) {
        throw NoAnswerError("no route grounded the question to a graph entity");
    }

    Answer result = answer_by_voting(executed, [this](const ReasoningPath& p) { return answer_of(p); });
    std::map<std::size_t, double> votes;
    for (const auto& [position, mass] : result.route_votes) {
        votes[executed_index[position]] = mass;
    }
    result.route_votes = std::move(votes);
    result.routes_executed = executed.size();
    result.oracle_calls = oracle.calls();

    nlohmann::json vote_json = nlohmann::json::object();
    for (const auto& [route, mass] : result.route_votes) {
        vote_json[std::to_string(route)] = mass;
    }
    nlohmann::json support = nlohmann::json::array();
    for (const auto& p : result.supporting_paths) {
        support.push_back(path_json(p));
    }
    audit.push_back({{"stage", "vote"},
                     {"answer", result.value},
                     {"confidence_mass", result.confidence_mass},
                     {"route_votes", vote_json},
                     {"supporting_paths", support}});
    result.audit = std::move(audit);
    return result;
}

} // namespace tkg
