// tkg: build and inspect temporal graph snapshots, evolve them from documents,
// answer questions and run evaluations.

#include "CLI11.hpp"
#include "json.hpp"
#include "tkg/config.hpp"
#include "tkg/error.hpp"
#include "tkg/eval.hpp"
#include "tkg/evolve.hpp"
#include "tkg/fixtures.hpp"
#include "tkg/json_io.hpp"
#include "tkg/reason.hpp"
#include "tkg/snapshot.hpp"
#include "tkg/version.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

using nlohmann::json;

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw tkg::ValidationError("cannot write " + path);
    }
    return out;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw tkg::ValidationError("cannot open " + path);
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw tkg::ParseError(path + ": " + e.what(), 1);
    }
}

// --set section.key=value; the value is parsed as JSON when possible.
tkg::AppConfig resolve_config(const std::string& path, const std::vector<std::string>& overrides) {
    json j = path.empty() ? json::object() : read_json_file(path);
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) {
            throw tkg::ConfigError("--set expects section.key=value, got '" + o + "'");
        }
        const std::string key = o.substr(0, eq);
        const std::string raw = o.substr(eq + 1);
        json value = json::parse(raw, nullptr, false);
        if (value.is_discarded()) {
            value = raw;
        }
        json* node = &j;
        std::stringstream parts(key);
        std::string part;
        std::vector<std::string> path_parts;
        while (std::getline(parts, part, '.')) {
            path_parts.push_back(part);
        }
        for (std::size_t i = 0; i + 1 < path_parts.size(); ++i) {
            node = &(*node)[path_parts[i]];
        }
        (*node)[path_parts.back()] = value;
    }
    return tkg::config_from_json(j);
}

std::vector<tkg::RelationSchema> load_schemas(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw tkg::ValidationError("cannot open " + path);
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<tkg::RelationSchema> schemas;
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '[') {
        json arr;
        try {
            arr = json::parse(text);
        } catch (const json::exception& e) {
            throw tkg::ParseError(e.what(), 1);
        }
        for (const auto& r : arr) {
            schemas.push_back(tkg::schema_from_json(r));
        }
    } else {
        std::istringstream lines(text);
        tkg::for_each_jsonl(lines, [&](const json& r, std::size_t) { schemas.push_back(tkg::schema_from_json(r)); });
    }
    return schemas;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

void print_entity(const tkg::GraphStore& store, const tkg::Entity& e) {
    std::cout << e.id << "  " << e.type << ": " << e.name;
    if (!e.description.empty()) {
        std::cout << "  (" << e.description << ")";
    }
    std::cout << '\n';
    for (const auto& [key, value] : e.properties) {
        if (const auto* plain = std::get_if<std::string>(&value)) {
            std::cout << "    " << key << " = " << *plain << '\n';
            continue;
        }
        std::cout << "    " << key << " [exclusive]\n";
        for (const auto& c : std::get<tkg::CandidateSet>(value)) {
            std::cout << "      " << c.value << "  confidence " << fmt(c.confidence) << "  seen " << c.frequency_count
                      << "x  last " << c.last_seen.date_label() << "  ctx \"" << c.context << "\"\n";
        }
    }
    for (const auto& id : store.out_edge_ids(e.id)) {
        const tkg::Edge& edge = store.edge(id);
        std::cout << "    -[" << edge.relation << "]-> " << edge.target << " " << store.entity(edge.target).name
                  << "  [" << edge.interval.start.date_label() << ", " << edge.interval.end.date_label() << "]  ("
                  << id << ")\n";
    }
}

struct ErrorInfo {
    int code;
    const char* kind;
};

ErrorInfo classify(const std::exception& e) {
    if (dynamic_cast<const tkg::NoAnswerError*>(&e)) {
        return {3, "no_answer"};
    }
    if (dynamic_cast<const tkg::OracleFormatError*>(&e)) {
        return {2, "oracle"};
    }
    if (dynamic_cast<const tkg::TransportError*>(&e)) {
        return {2, "transport"};
    }
    if (dynamic_cast<const tkg::ConfigError*>(&e)) {
        return {1, "config"};
    }
    if (dynamic_cast<const tkg::ParseError*>(&e)) {
        return {1, "parse"};
    }
    if (dynamic_cast<const tkg::ValidationError*>(&e)) {
        return {1, "validation"};
    }
    return {1, "error"};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Temporal knowledge graph evolution and question answering"};
    app.require_subcommand(0, 1);
    bool show_version = false;
    app.add_flag("--version", show_version, "Print artifact and snapshot format versions");

    std::string config_path;
    std::vector<std::string> overrides;
    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config with oracle/evolution/reasoner/eval sections");
        sub->add_option("--set", overrides, "Override a config value: section.key=value")->take_all();
    };

    std::string schema_path, out_path, kg_path, docs_path, audit_path, now_text;
    auto* init = app.add_subcommand("init", "Create an empty snapshot with registered schemas");
    init->add_option("--schema", schema_path, "Schema list (JSON array or JSONL)")->required();
    init->add_option("--out", out_path, "Snapshot to write")->required();

    auto* update = app.add_subcommand("update", "Evolve a snapshot from a document corpus");
    update->add_option("--kg", kg_path, "Input snapshot")->required();
    update->add_option("--docs", docs_path, "Corpus JSONL")->required();
    update->add_option("--out", out_path, "Output snapshot")->required();
    update->add_option("--audit", audit_path, "Audit log (JSONL)");
    update->add_option("--now", now_text, "Clock for confidence decay (default: latest document time)");
    add_config(update);

    std::string question, query_time;
    auto* ask = app.add_subcommand("ask", "Answer a question against a snapshot");
    ask->add_option("--kg", kg_path, "Snapshot")->required();
    ask->add_option("--question", question, "Question text")->required();
    ask->add_option("--query-time", query_time, "ISO-8601 query time")->required();
    ask->add_option("--audit", audit_path, "Audit log (JSONL)");
    add_config(ask);

    std::string dataset_path, compare_path, report_path;
    std::optional<std::size_t> runs, jobs;
    std::optional<std::int64_t> seed;
    auto* eval = app.add_subcommand("eval", "Evaluate QA accuracy on a dataset");
    eval->add_option("--kg", kg_path, "Snapshot")->required();
    eval->add_option("--dataset", dataset_path, "QA JSONL")->required();
    eval->add_option("--runs", runs, "Repeated runs");
    eval->add_option("--seed", seed, "Seed");
    eval->add_option("--jobs", jobs, "Concurrent questions");
    eval->add_option("--compare-kg", compare_path, "Snapshot evaluated as \"after\", with --kg as \"before\"");
    eval->add_option("--report", report_path, "Write verdict JSONL here");
    add_config(eval);

    std::string entity_id;
    auto* dump = app.add_subcommand("dump", "List a snapshot's entities, candidate sets and edges");
    dump->add_option("--kg", kg_path, "Snapshot")->required();
    dump->add_option("--entity", entity_id, "Only this entity");

    std::string spec_path, out_dir;
    auto* gen = app.add_subcommand("gen-world", "Generate a synthetic world");
    gen->add_option("--spec", spec_path, "World spec JSON")->required();
    gen->add_option("--out-dir", out_dir, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (show_version) {
            std::cout << "tkg " << tkg::kVersion << " (snapshot format " << tkg::kSnapshotFormatVersion << ")\n";
            return 0;
        }
        if (*init) {
            tkg::GraphStore store;
            for (const auto& s : load_schemas(schema_path)) {
                store.register_schema(s);
            }
            tkg::snapshot_save(store, std::filesystem::path(out_path));
            std::cout << "schemas: " << store.schemas().size() << '\n';
        } else if (*update) {
            const tkg::AppConfig config = resolve_config(config_path, overrides);
            tkg::GraphStore store = tkg::snapshot_load(std::filesystem::path(kg_path));
            const auto corpus = tkg::load_corpus(std::filesystem::path(docs_path));
            tkg::Timestamp now;
            if (!now_text.empty()) {
                now = tkg::Timestamp::parse_iso8601(now_text);
            } else {
                for (const auto& d : corpus) {
                    if (d.published_at.known() && (!now.known() || d.published_at > now)) {
                        now = d.published_at;
                    }
                }
            }
            const auto encoder = tkg::make_encoder(config.embedding);
            const auto oracle = tkg::make_oracle(config.oracle, encoder);
            const std::int64_t before = store.revision();
            const tkg::MergeReport report = tkg::update_from_corpus(corpus, store, *encoder, *oracle, config.evolution, now);
            tkg::snapshot_save(store, std::filesystem::path(out_path));
            if (!audit_path.empty()) {
                auto out = open_out(audit_path);
                out << json{{"kind", "config"}, {"config", tkg::config_to_json(config)}, {"revision", before}}.dump()
                    << '\n';
                for (const auto& r : report.audit) {
                    out << r.dump() << '\n';
                }
                out << json{{"kind", "summary"}, {"report", report.summary()}}.dump() << '\n';
            }
            std::cout << report.summary().dump(2) << '\n';
        } else if (*ask) {
            const tkg::AppConfig config = resolve_config(config_path, overrides);
            const tkg::GraphStore store = tkg::snapshot_load(std::filesystem::path(kg_path));
            const auto encoder = tkg::make_encoder(config.embedding);
            const auto oracle = tkg::make_oracle(config.oracle, encoder);
            const tkg::EmbeddingIndex index = tkg::build_entity_index(store, *encoder);
            const tkg::Reasoner reasoner(store, index, *encoder, *oracle, config.reasoner);
            const tkg::Timestamp t = tkg::Timestamp::parse_iso8601(query_time);
            try {
                const tkg::Answer answer = reasoner.answer(question, t);
                std::cout << "answer: " << answer.value << '\n';
                std::cout << "confidence_mass: " << fmt(answer.confidence_mass) << '\n';
                for (const auto& [route, mass] : answer.route_votes) {
                    std::cout << "route " << route << ": " << fmt(mass) << '\n';
                }
                if (!audit_path.empty()) {
                    auto out = open_out(audit_path);
                    out << json{{"kind", "config"}, {"config", tkg::config_to_json(config)}, {"question", question}}
                               .dump()
                        << '\n';
                    for (const auto& r : answer.audit) {
                        out << r.dump() << '\n';
                    }
                }
            } catch (const tkg::NoAnswerError&) {
                if (!audit_path.empty()) {
                    auto out = open_out(audit_path);
                    out << json{{"kind", "config"}, {"config", tkg::config_to_json(config)}, {"question", question}}
                               .dump()
                        << '\n';
                }
                throw;
            }
        } else if (*eval) {
            tkg::AppConfig config = resolve_config(config_path, overrides);
            if (runs) {
                config.eval.runs = *runs;
            }
            if (seed) {
                config.eval.seed = *seed;
            }
            if (jobs) {
                config.eval.jobs = *jobs;
            }
            config.validate();
            const auto dataset = tkg::load_dataset(std::filesystem::path(dataset_path));
            const tkg::GraphStore store = tkg::snapshot_load(std::filesystem::path(kg_path));
            const auto encoder = tkg::make_encoder(config.embedding);
            const auto oracle = tkg::make_oracle(config.oracle, encoder);
            if (compare_path.empty()) {
                const auto report = tkg::run_eval(dataset, store, *encoder, *oracle, config.reasoner, config.eval);
                std::cout << "mean " << fmt(report.mean) << "  std " << fmt(report.std) << "  runs " << report.runs
                          << "  (population std)\n";
                if (!report_path.empty()) {
                    auto out = open_out(report_path);
                    report.write_jsonl(out);
                }
            } else {
                const tkg::GraphStore other = tkg::snapshot_load(std::filesystem::path(compare_path));
                const auto c = tkg::compare_kgs(dataset, store, other, *encoder, *oracle, config.reasoner, config.eval);
                std::cout << c.table();
                if (!report_path.empty()) {
                    auto out = open_out(report_path);
                    c.before.write_jsonl(out);
                    c.after.write_jsonl(out);
                    out << json{{"kind", "comparison"}, {"delta", c.delta}}.dump() << '\n';
                }
            }
        } else if (*dump) {
            const tkg::GraphStore store = tkg::snapshot_load(std::filesystem::path(kg_path));
            if (!entity_id.empty()) {
                if (!store.has_entity(entity_id)) {
                    throw tkg::ReferentialError("no entity '" + entity_id + "'");
                }
                print_entity(store, store.entity(entity_id));
            } else {
                std::cout << "revision " << store.revision() << ", " << store.entities().size() << " entities, "
                          << store.edges().size() << " edges, " << store.schemas().size() << " schemas\n";
                for (const auto& [_, s] : store.schemas()) {
                    std::cout << "schema " << s.subject_type << " -[" << s.relation << "]-> " << s.object_type
                              << (s.exclusive ? "  exclusive" : "") << '\n';
                }
                for (const auto& [_, e] : store.entities()) {
                    print_entity(store, e);
                }
            }
        } else if (*gen) {
            const tkg::WorldSpec spec = tkg::world_spec_from_json(read_json_file(spec_path));
            const tkg::World world = tkg::generate_world(spec);
            tkg::write_world(world, out_dir);
            std::size_t recovery = 0;
            for (const auto& q : world.questions) {
                recovery += q.tags.empty() ? 0 : 1;
            }
            std::cout << "entities " << world.truth.entities().size() << "  edges " << world.truth.edges().size()
                      << "  removed " << world.removed.size() << "  documents " << world.corpus.size()
                      << "  questions " << world.questions.size() << " (" << recovery << " need recovery)\n";
        } else {
            std::cout << app.help();
        }
    } catch (const std::exception& e) {
        const ErrorInfo info = classify(e);
        std::cerr << json{{"error", info.kind}, {"exit_code", info.code}, {"message", e.what()}}.dump() << '\n';
        return info.code;
    }
    return 0;
}
