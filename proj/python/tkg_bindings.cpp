// Python bindings. Records cross the boundary as plain dicts in the same
// shape as the JSONL files.

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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>
#include <sstream>

namespace py = pybind11;
using nlohmann::json;

namespace {

json to_json(const py::handle& obj) {
    const auto dumps = py::module_::import("json").attr("dumps");
    return json::parse(dumps(obj).cast<std::string>());
}

py::object to_python(const json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

// Records built in Python may leave the id out; the store assigns one.
json with_id(const py::dict& record) {
    json j = to_json(record);
    if (!j.contains("id")) {
        j["id"] = "";
    }
    return j;
}

std::string to_jsonl(const py::list& records) {
    std::string out;
    for (const auto& r : records) {
        out += to_json(r).dump();
        out += '\n';
    }
    return out;
}

tkg::Timestamp parse_time(const std::optional<std::string>& text) {
    return text ? tkg::Timestamp::parse_iso8601(*text) : tkg::Timestamp::unknown();
}

py::dict report_summary(const tkg::EvalReport& r, const std::vector<tkg::QAItem>& dataset) {
    py::dict out = to_python(r.summary());
    const auto recovery = r.accuracy_for(dataset, tkg::kRecoveryTag);
    out["recovery_accuracy"] = recovery ? py::cast(*recovery) : py::none();
    py::list verdicts;
    for (const auto& v : r.verdicts) {
        py::dict d;
        d["id"] = v.item_id;
        d["run"] = v.run;
        d["predicted"] = v.predicted;
        d["correct"] = v.correct;
        d["no_answer"] = v.no_answer;
        d["confidence_mass"] = v.confidence_mass;
        verdicts.append(d);
    }
    out["verdicts"] = verdicts;
    return out;
}

// Configuration, encoder and oracle shared by the operations below.
class Engine {
public:
    explicit Engine(const py::object& config) {
        config_ = config.is_none() ? tkg::AppConfig{} : tkg::config_from_json(to_json(config));
        config_.validate();
        encoder_ = tkg::make_encoder(config_.embedding);
        oracle_ = tkg::make_oracle(config_.oracle, encoder_);
    }

    static Engine from_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) {
            throw tkg::ValidationError("cannot open " + path.string());
        }
        return Engine(to_python(json::parse(in)));
    }

    py::object config() const { return to_python(tkg::config_to_json(config_)); }

    // Evolves `graph` in place; `now` defaults to the latest publication time.
    py::object update(tkg::GraphStore& graph, const py::list& documents, const std::optional<std::string>& now) const {
        std::istringstream in(to_jsonl(documents));
        const auto corpus = tkg::load_corpus(in);
        tkg::Timestamp clock = parse_time(now);
        if (!now) {
            for (const auto& d : corpus) {
                if (d.published_at.known() && (!clock.known() || d.published_at > clock)) {
                    clock = d.published_at;
                }
            }
        }
        tkg::MergeReport report;
        {
            py::gil_scoped_release release;
            report = tkg::update_from_corpus(corpus, graph, *encoder_, *oracle_, config_.evolution, clock);
        }
        return to_python(report.summary());
    }

    py::dict ask(const tkg::GraphStore& graph, const std::string& question, const std::string& query_time) const {
        const tkg::EmbeddingIndex index = tkg::build_entity_index(graph, *encoder_);
        const tkg::Reasoner reasoner(graph, index, *encoder_, *oracle_, config_.reasoner);
        tkg::Answer a;
        {
            py::gil_scoped_release release;
            a = reasoner.answer(question, tkg::Timestamp::parse_iso8601(query_time));
        }
        py::dict out;
        out["answer"] = a.value;
        out["confidence_mass"] = a.confidence_mass;
        out["route_votes"] = a.route_votes;
        out["routes_executed"] = a.routes_executed;
        out["oracle_calls"] = a.oracle_calls;
        py::list paths;
        for (const auto& p : a.supporting_paths) {
            py::dict d;
            d["text"] = reasoner.verbalize_path(p);
            d["confidence"] = p.confidence;
            paths.append(d);
        }
        out["paths"] = paths;
        return out;
    }

    py::dict evaluate(const tkg::GraphStore& graph, const py::list& dataset) const {
        const auto items = load(dataset);
        tkg::EvalReport r;
        {
            py::gil_scoped_release release;
            r = tkg::run_eval(items, graph, *encoder_, *oracle_, config_.reasoner, config_.eval);
        }
        return report_summary(r, items);
    }

    py::dict compare(const tkg::GraphStore& before, const tkg::GraphStore& after, const py::list& dataset) const {
        const auto items = load(dataset);
        tkg::Comparison c;
        {
            py::gil_scoped_release release;
            c = tkg::compare_kgs(items, before, after, *encoder_, *oracle_, config_.reasoner, config_.eval);
        }
        py::dict out;
        out["before"] = report_summary(c.before, items);
        out["after"] = report_summary(c.after, items);
        out["delta"] = c.delta;
        out["table"] = c.table();
        return out;
    }

private:
    static std::vector<tkg::QAItem> load(const py::list& dataset) {
        std::istringstream in(to_jsonl(dataset));
        return tkg::load_dataset(in);
    }

    tkg::AppConfig config_;
    std::shared_ptr<const tkg::Encoder> encoder_;
    std::unique_ptr<tkg::Oracle> oracle_;
};

} // namespace

PYBIND11_MODULE(_tkg, m) {
    m.doc() = "Temporal knowledge graph evolution and question answering";
    m.attr("__version__") = tkg::kVersion;

    auto base = py::register_exception<tkg::Error>(m, "TkgError", PyExc_RuntimeError);
    auto validation = py::register_exception<tkg::ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<tkg::ConfigError>(m, "ConfigError", validation.ptr());
    py::register_exception<tkg::ParseError>(m, "ParseError", validation.ptr());
    py::register_exception<tkg::PreconditionError>(m, "PreconditionError", validation.ptr());
    py::register_exception<tkg::OracleFormatError>(m, "OracleFormatError", base.ptr());
    py::register_exception<tkg::TransportError>(m, "TransportError", base.ptr());
    py::register_exception<tkg::NoAnswerError>(m, "NoAnswerError", base.ptr());
    // Malformed records surface as ValidationError rather than a bare RuntimeError.
    static py::handle validation_type = validation.ptr();
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) {
                std::rethrow_exception(p);
            }
        } catch (const json::exception& e) {
            PyErr_SetString(validation_type.ptr(), e.what());
        }
    });

    py::class_<tkg::GraphStore>(m, "Graph")
        .def(py::init<>())
        .def_static("load", [](const std::filesystem::path& p) { return tkg::snapshot_load(p); }, py::arg("path"))
        .def("save", [](const tkg::GraphStore& g, const std::filesystem::path& p) { tkg::snapshot_save(g, p); },
             py::arg("path"))
        .def("copy", [](const tkg::GraphStore& g) { return tkg::GraphStore(g); })
        .def_property_readonly("revision", &tkg::GraphStore::revision)
        .def("register_schema",
             [](tkg::GraphStore& g, const py::dict& s) { g.register_schema(tkg::schema_from_json(to_json(s))); },
             py::arg("schema"))
        .def("upsert_entity",
             [](tkg::GraphStore& g, const py::dict& e) { return g.upsert_entity(tkg::entity_from_json(with_id(e))); },
             py::arg("entity"), "Insert or replace an entity; returns its id")
        .def("insert_edge",
             [](tkg::GraphStore& g, const py::dict& e) { return g.insert_edge(tkg::edge_from_json(with_id(e))); },
             py::arg("edge"), "Insert an edge; returns its id")
        .def("entity", [](const tkg::GraphStore& g, const std::string& id) { return to_python(tkg::entity_to_json(g.entity(id))); })
        .def("entities",
             [](const tkg::GraphStore& g) {
                 py::list out;
                 for (const auto& [_, e] : g.entities()) {
                     out.append(to_python(tkg::entity_to_json(e)));
                 }
                 return out;
             })
        .def("edges",
             [](const tkg::GraphStore& g) {
                 py::list out;
                 for (const auto& [_, e] : g.edges()) {
                     out.append(to_python(tkg::edge_to_json(e)));
                 }
                 return out;
             })
        .def("schemas",
             [](const tkg::GraphStore& g) {
                 py::list out;
                 for (const auto& [_, s] : g.schemas()) {
                     out.append(to_python(tkg::schema_to_json(s)));
                 }
                 return out;
             })
        .def("__eq__", [](const tkg::GraphStore& a, const tkg::GraphStore& b) { return a == b; })
        .def("__repr__", [](const tkg::GraphStore& g) {
            return "<Graph revision " + std::to_string(g.revision()) + ", " + std::to_string(g.entities().size()) +
                   " entities, " + std::to_string(g.edges().size()) + " edges>";
        });

    py::class_<Engine>(m, "Engine")
        .def(py::init<const py::object&>(), py::arg("config") = py::none())
        .def_static("from_file", &Engine::from_file, py::arg("path"))
        .def_property_readonly("config", &Engine::config)
        .def("update", &Engine::update, py::arg("graph"), py::arg("documents"), py::arg("now") = py::none())
        .def("ask", &Engine::ask, py::arg("graph"), py::arg("question"), py::arg("query_time"))
        .def("evaluate", &Engine::evaluate, py::arg("graph"), py::arg("dataset"))
        .def("compare", &Engine::compare, py::arg("before"), py::arg("after"), py::arg("dataset"));

    m.def(
        "encode",
        [](const std::string& text, std::size_t dimension) { return tkg::HashEncoder(dimension).encode(text).components; },
        py::arg("text"), py::arg("dimension") = 256);
    m.def(
        "cosine",
        [](const std::vector<double>& a, const std::vector<double>& b) {
            return tkg::cosine_sim(tkg::Vector{a}, tkg::Vector{b});
        },
        py::arg("a"), py::arg("b"));
    m.def("candidate_confidence", &tkg::candidate_confidence, py::arg("frequency_share"), py::arg("elapsed_days"),
          py::arg("source_weight"), py::arg("gamma") = -0.05, py::arg("delta") = 0.7);
    m.def(
        "generate_world",
        [](const py::dict& spec, const std::filesystem::path& out_dir) {
            const tkg::World w = tkg::generate_world(tkg::world_spec_from_json(to_json(spec)));
            tkg::write_world(w, out_dir);
            py::dict out;
            out["effective_seed"] = w.effective_seed;
            out["entities"] = w.truth.entities().size();
            out["removed"] = w.removed;
            out["documents"] = w.corpus.size();
            out["questions"] = w.questions.size();
            return out;
        },
        py::arg("spec"), py::arg("out_dir"), "Generate a synthetic world and write its files into out_dir");
}
