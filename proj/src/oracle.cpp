#include "tkg/oracle.hpp"

#include "tkg/error.hpp"
#include "tkg/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <regex>
#include <set>
#include <sstream>

namespace tkg {

void OracleConfig::validate() const {
    if (backend == Backend::remote && (endpoint_url.empty() || model_name.empty())) {
        throw ConfigError("remote oracle requires endpoint_url and model_name");
    }
    if (temperature < 0.0) {
        throw ConfigError("oracle temperature must be >= 0");
    }
    if (max_retries < 0 || max_retries > 10) {
        throw ConfigError("oracle max_retries must be in [0, 10]");
    }
    if (max_in_flight < 1 || max_in_flight > 1024) {
        throw ConfigError("oracle max_in_flight must be in [1, 1024]");
    }
}

namespace {

std::string percent(double confidence) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%d%%", static_cast<int>(std::lround(confidence * 100.0)));
    return buf;
}

// Adds entities by (type, name) and facts referencing them.
class PartialGraphBuilder {
public:
    std::size_t entity(const std::string& type, const std::string& name, const std::string& description = {}) {
        if (trim(name).empty()) {
            throw OracleFormatError("extracted entity has an empty name");
        }
        const auto key = std::pair{type, name};
        if (auto it = positions_.find(key); it != positions_.end()) {
            if (graph_.entities[it->second].description.empty()) {
                graph_.entities[it->second].description = description;
            }
            return it->second;
        }
        Entity e;
        e.type = type;
        e.name = name;
        e.description = description;
        graph_.entities.push_back(std::move(e));
        positions_.emplace(key, graph_.entities.size() - 1);
        return graph_.entities.size() - 1;
    }

    void fact(const std::string& subject_type, const std::string& subject, const std::string& relation,
              const std::string& object_type, const std::string& object, TemporalInterval interval, bool exclusive,
              PropertyMap properties = {}) {
        if (trim(relation).empty() || trim(object).empty()) {
            throw OracleFormatError("extracted fact has an empty relation or object");
        }
        try {
            interval.validate();
        } catch (const IntervalError& e) {
            throw OracleFormatError(std::string("extracted fact has an invalid interval: ") + e.what());
        }
        ExtractedFact f;
        f.subject = entity(subject_type, subject);
        f.relation = relation;
        f.object_type = object_type;
        f.object = object;
        if (!exclusive) {
            f.object_entity = entity(object_type, object);
        }
        f.interval = interval;
        f.exclusive = exclusive;
        f.properties = std::move(properties);
        graph_.edges.push_back(std::move(f));
    }

    PartialGraph take() { return std::move(graph_); }

private:
    PartialGraph graph_;
    std::map<std::pair<std::string, std::string>, std::size_t> positions_;
};

Timestamp parse_fact_time(const std::string& raw) {
    const std::string t = to_lower(trim(raw));
    if (t.empty() || t == "unknown" || t == "null" || t == "?" || t == "none") {
        return Timestamp::unknown();
    }
    try {
        return Timestamp::parse_iso8601(trim(raw));
    } catch (const ValidationError& e) {
        throw OracleFormatError(e.what());
    }
}

bool parse_flag(const std::string& raw) {
    const std::string t = to_lower(trim(raw));
    if (t == "true" || t == "1" || t == "yes" || t == "exclusive") {
        return true;
    }
    if (t == "false" || t == "0" || t == "no" || t.empty()) {
        return false;
    }
    throw OracleFormatError("invalid exclusive flag '" + raw + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string current;
    std::istringstream in(s);
    while (std::getline(in, current, sep)) {
        parts.push_back(current);
    }
    if (!s.empty() && s.back() == sep) {
        parts.emplace_back();
    }
    return parts;
}

// Clamps negatives to 0 and rescales to sum 1; uniform when all are 0.
std::vector<double> renormalize(std::vector<double> values) {
    double sum = 0.0;
    for (double& v : values) {
        v = std::max(0.0, v);
        sum += v;
    }
    for (double& v : values) {
        v = sum > 0.0 ? v / sum : 1.0 / static_cast<double>(values.size());
    }
    return values;
}

const std::set<std::string>& leading_stopwords() {
    static const std::set<std::string> words{
        "which", "what",  "who",   "whom",   "whose",  "when",  "where", "why",   "how",    "did",
        "does",  "do",    "is",    "are",    "was",    "were",  "in",    "on",    "at",     "the",
        "a",     "an",    "of",    "for",    "during", "since", "before", "after", "has",   "have",
        "had",   "can",   "could", "will",   "would",  "name",  "list",  "tell",  "give",   "find",
        "from",  "to",    "by",    "with",   "and",    "or",    "i",     "me",    "please", "january",
        "february", "march", "april", "may", "june", "july", "august", "september", "october", "november",
        "december", "between", "as", "if", "that", "this", "these", "those", "there"};
    return words;
}

bool is_joiner(const std::string& word) {
    static const std::set<std::string> joiners{"of", "the", "de", "la", "von", "van", "del", "da", "&"};
    return joiners.contains(to_lower(word));
}

bool capitalized(const std::string& word) {
    return !word.empty() && ((word[0] >= 'A' && word[0] <= 'Z') || static_cast<unsigned char>(word[0]) >= 0x80);
}

} // namespace

std::string render_candidate(std::size_t position, const Entity& entity) {
    std::string out = "ent_" + std::to_string(position) + ": (" + entity.type + ": " + entity.name + ", desc: \"" +
                      entity.description + "\", props: {";
    bool first = true;
    for (const auto& [key, value] : entity.properties) {
        if (!first) {
            out += ", ";
        }
        first = false;
        out += key + ": [";
        if (const auto* plain = std::get_if<std::string>(&value)) {
            out += *plain;
        } else {
            const auto& set = std::get<CandidateSet>(value);
            for (std::size_t i = 0; i < set.size(); ++i) {
                if (i) {
                    out += ", ";
                }
                out += set[i].value + " (" + percent(set[i].confidence) + ", ctx:\"" + set[i].context + "\")";
            }
        }
        out += "]";
    }
    out += "})";
    return out;
}

std::vector<std::string> find_temporal_expressions(const std::string& text) {
    static const std::string months =
        "(?:January|February|March|April|May|June|July|August|September|October|November|December)";
    static const std::regex pattern("\\b(?:\\d{4}-\\d{2}-\\d{2}|\\d{1,2}\\s+" + months + "\\s+\\d{4}|" + months +
                                    "(?:\\s+\\d{1,2}(?:st|nd|rd|th)?,?)?\\s+\\d{4}|1\\d{3}|20\\d{2})\\b");
    std::vector<std::string> found;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), pattern); it != std::sregex_iterator(); ++it) {
        found.push_back(it->str());
    }
    return found;
}

PartialGraph parse_fact_block(const std::string& text) {
    PartialGraphBuilder builder;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (!line.starts_with("FACT|")) {
            continue;
        }
        const auto fields = split(line.substr(5), '|');
        if (fields.size() < 8) {
            throw OracleFormatError("FACT record needs 8 fields: '" + line + "'");
        }
        PropertyMap properties;
        for (std::size_t i = 8; i < fields.size(); ++i) {
            const auto eq = fields[i].find('=');
            if (eq == std::string::npos) {
                throw OracleFormatError("FACT property must be key=value: '" + fields[i] + "'");
            }
            properties[trim(fields[i].substr(0, eq))] = trim(fields[i].substr(eq + 1));
        }
        builder.fact(trim(fields[0]), trim(fields[1]), trim(fields[2]), trim(fields[3]), trim(fields[4]),
                     TemporalInterval{parse_fact_time(fields[5]), parse_fact_time(fields[6])}, parse_flag(fields[7]),
                     std::move(properties));
    }
    return builder.take();
}

// ---------------------------------------------------------------------------
// Deterministic backend

DeterministicOracle::DeterministicOracle(std::shared_ptr<const Encoder> encoder) : encoder_(std::move(encoder)) {
    if (!encoder_) {
        throw ConfigError("deterministic oracle requires an encoder");
    }
}

RoutePlan DeterministicOracle::plan_routes(const std::string& question, const Timestamp&, std::size_t n_routes) const {
    if (trim(question).empty()) {
        throw ValidationError("question must be non-empty");
    }
    if (n_routes == 0) {
        throw ValidationError("n_routes must be >= 1");
    }
    return {"single route: the whole question is one sub-objective", {{question}}};
}

MentionAnalysis DeterministicOracle::extract_mentions(const std::string& question, const Timestamp&,
                                                      const std::vector<std::string>&) const {
    if (trim(question).empty()) {
        throw ValidationError("question must be non-empty");
    }
    const auto temporal = find_temporal_expressions(question);
    std::string masked = question;
    for (const auto& expr : temporal) {
        if (auto pos = masked.find(expr); pos != std::string::npos) {
            masked.replace(pos, expr.size(), std::string(expr.size(), ','));
        }
    }

    // Words and hard breaks (punctuation other than ' - & .) in order.
    std::vector<std::string> words;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            words.push_back(std::move(current));
            current.clear();
        }
    };
    for (std::size_t i = 0; i < masked.size(); ++i) {
        const char c = masked[i];
        const auto uc = static_cast<unsigned char>(c);
        if (std::isalnum(uc) || uc >= 0x80 || c == '\'' || c == '-' || c == '&' ||
            (c == '.' && !current.empty() && i + 1 < masked.size() && masked[i + 1] != ' ')) {
            current.push_back(c);
        } else if (c == ' ' || c == '\t') {
            flush();
        } else {
            flush();
            words.emplace_back();  // break marker
        }
    }
    flush();

    std::vector<std::string> mentions;
    std::vector<std::string> span;
    auto close_span = [&] {
        while (!span.empty() && (leading_stopwords().contains(to_lower(span.front())) || is_joiner(span.front()))) {
            span.erase(span.begin());
        }
        while (!span.empty() && is_joiner(span.back())) {
            span.pop_back();
        }
        if (!span.empty()) {
            std::string m = join(span, " ");
            if (std::find(mentions.begin(), mentions.end(), m) == mentions.end()) {
                mentions.push_back(std::move(m));
            }
        }
        span.clear();
    };
    for (std::size_t i = 0; i < words.size(); ++i) {
        const std::string& w = words[i];
        if (w.empty()) {
            close_span();
            continue;
        }
        if (capitalized(w)) {
            if (leading_stopwords().contains(to_lower(w)) && !span.empty() && !is_joiner(w)) {
                close_span();
            }
            span.push_back(w);
        } else if (!span.empty() && (is_joiner(w) || std::isdigit(static_cast<unsigned char>(w[0])))) {
            span.push_back(w);
        } else {
            close_span();
        }
    }
    close_span();

    const std::string context = join(temporal, " ");
    MentionAnalysis analysis;
    analysis.mentions = mentions;
    analysis.temporal_contexts.assign(mentions.size(), context);
    return analysis;
}

RelevanceScores DeterministicOracle::score_entities(const std::string& question, const Timestamp&,
                                                    const std::vector<std::string>&,
                                                    const std::vector<std::string>& candidates) const {
    if (candidates.empty()) {
        throw ValidationError("score_entities requires at least one candidate");
    }
    const Vector q = encoder_->encode(question);
    std::vector<double> raw;
    raw.reserve(candidates.size());
    for (const auto& c : candidates) {
        raw.push_back(cosine_sim(q, encoder_->encode(c)));
    }
    const auto scores = renormalize(std::move(raw));
    RelevanceScores result;
    result.reason = "cosine similarity between question and candidate rendering";
    for (std::size_t i = 0; i < scores.size(); ++i) {
        result.scores["ent_" + std::to_string(i)] = scores[i];
    }
    return result;
}

std::map<std::string, double> DeterministicOracle::score_relations(const std::string&,
                                                                   const std::vector<std::string>& subgoals,
                                                                   const std::vector<RelationCount>& relations) const {
    std::map<std::string, double> result;
    if (relations.empty()) {
        return result;
    }
    const Vector goal = encoder_->encode(join(subgoals, " "));
    std::vector<double> raw;
    for (const auto& r : relations) {
        raw.push_back(cosine_sim(goal, encoder_->encode(r.relation)));
    }
    const auto scores = renormalize(std::move(raw));
    for (std::size_t i = 0; i < relations.size(); ++i) {
        result[relations[i].relation] = scores[i];
    }
    return result;
}

double DeterministicOracle::align_score(const std::string& candidate_rendering, const std::string& kg_rendering) const {
    if (trim(candidate_rendering).empty() || trim(kg_rendering).empty()) {
        throw ValidationError("align_score requires non-empty renderings");
    }
    return std::max(0.0, cosine_sim(encoder_->encode(candidate_rendering), encoder_->encode(kg_rendering)));
}

PartialGraph DeterministicOracle::extract_partial_kg(const Document& document) const {
    if (trim(document.text).empty()) {
        throw ValidationError("document '" + document.id + "' is empty");
    }
    return parse_fact_block(document.text);
}

Judgement DeterministicOracle::judge_answer(const std::string& question, const std::vector<std::string>& paths) const {
    if (paths.empty()) {
        return {};
    }
    const auto tokens = tokenize(question);
    std::string slot;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i] == "who" || tokens[i] == "whom") {
            slot = "person";
            break;
        }
        if (tokens[i] == "which" || tokens[i] == "what") {
            std::size_t j = i + 1;
            while (j < tokens.size() && (tokens[j] == "the" || tokens[j] == "a" || tokens[j] == "an")) {
                ++j;
            }
            if (j < tokens.size()) {
                slot = tokens[j];
            }
            break;
        }
    }
    if (slot.empty()) {
        return {};
    }
    const std::string lowered_question = to_lower(question);
    for (const auto& path : paths) {
        const auto marker = path.rfind(kPathTerminalMarker);
        if (marker == std::string::npos) {
            continue;
        }
        const std::string terminal = path.substr(marker + kPathTerminalMarker.size());
        const auto colon = terminal.find(": ");
        if (colon == std::string::npos) {
            continue;
        }
        const std::string type = to_lower(trim(terminal.substr(0, colon)));
        const std::string name = trim(terminal.substr(colon + 2));
        const bool type_matches = type == slot || (slot.size() > 1 && slot.back() == 's' && type + "s" == slot);
        if (type_matches && !name.empty() && lowered_question.find(to_lower(name)) == std::string::npos) {
            return {true, name};
        }
    }
    return {};
}

std::unique_ptr<Oracle> make_oracle(const OracleConfig& config, std::shared_ptr<const Encoder> encoder) {
    config.validate();
    if (config.backend == OracleConfig::Backend::remote) {
        return std::make_unique<RemoteOracle>(config);
    }
    return std::make_unique<DeterministicOracle>(std::move(encoder));
}

} // namespace tkg
