#include "tkg/config.hpp"

#include "tkg/error.hpp"

#include <fstream>
#include <set>

namespace tkg {

namespace {

using nlohmann::json;

void reject_unknown(const json& section, const std::string& name, const std::set<std::string>& allowed) {
    if (!section.is_object()) {
        throw ConfigError("config section '" + name + "' must be an object");
    }
    for (const auto& [key, _] : section.items()) {
        if (!allowed.contains(key)) {
            throw ConfigError("unknown config key '" + name + "." + key + "'");
        }
    }
}

template <typename T>
void read(const json& section, const char* key, T& out, const std::string& name) {
    if (auto it = section.find(key); it != section.end()) {
        try {
            out = it->get<T>();
        } catch (const json::exception&) {
            throw ConfigError("config key '" + name + "." + key + "' has the wrong type");
        }
    }
}

} // namespace

void AppConfig::validate() const {
    oracle.validate();
    evolution.validate();
    reasoner.validate();
    if (embedding.dimension == 0 && embedding.backend == EmbeddingConfig::Backend::hash) {
        throw ConfigError("embedding dimension must be >= 1");
    }
    if (embedding.backend == EmbeddingConfig::Backend::remote &&
        (embedding.endpoint_url.empty() || embedding.model_name.empty())) {
        throw ConfigError("remote embedding requires endpoint_url and model_name");
    }
    if (eval.runs < 1 || eval.jobs < 1) {
        throw ConfigError("eval runs and jobs must be >= 1");
    }
}

AppConfig config_from_json(const json& j) {
    AppConfig c;
    reject_unknown(j, "config", {"oracle", "evolution", "reasoner", "eval"});
    if (auto it = j.find("oracle"); it != j.end()) {
        const json& o = *it;
        reject_unknown(o, "oracle",
                       {"backend", "endpoint_url", "model_name", "api_key_env", "temperature", "max_retries",
                        "domain_label", "max_in_flight", "timeout_seconds", "embedding"});
        std::string backend = "deterministic";
        read(o, "backend", backend, "oracle");
        if (backend == "deterministic") {
            c.oracle.backend = OracleConfig::Backend::deterministic;
        } else if (backend == "remote") {
            c.oracle.backend = OracleConfig::Backend::remote;
        } else {
            throw ConfigError("oracle.backend must be 'deterministic' or 'remote'");
        }
        read(o, "endpoint_url", c.oracle.endpoint_url, "oracle");
        read(o, "model_name", c.oracle.model_name, "oracle");
        read(o, "api_key_env", c.oracle.api_key_env, "oracle");
        read(o, "temperature", c.oracle.temperature, "oracle");
        read(o, "max_retries", c.oracle.max_retries, "oracle");
        read(o, "domain_label", c.oracle.domain_label, "oracle");
        read(o, "max_in_flight", c.oracle.max_in_flight, "oracle");
        read(o, "timeout_seconds", c.oracle.timeout_seconds, "oracle");
        if (auto e = o.find("embedding"); e != o.end()) {
            reject_unknown(*e, "oracle.embedding",
                           {"backend", "dimension", "endpoint_url", "model_name", "api_key_env", "cache_path"});
            std::string eb = "hash";
            read(*e, "backend", eb, "oracle.embedding");
            if (eb == "hash") {
                c.embedding.backend = EmbeddingConfig::Backend::hash;
            } else if (eb == "remote") {
                c.embedding.backend = EmbeddingConfig::Backend::remote;
            } else {
                throw ConfigError("oracle.embedding.backend must be 'hash' or 'remote'");
            }
            read(*e, "dimension", c.embedding.dimension, "oracle.embedding");
            read(*e, "endpoint_url", c.embedding.endpoint_url, "oracle.embedding");
            read(*e, "model_name", c.embedding.model_name, "oracle.embedding");
            read(*e, "api_key_env", c.embedding.api_key_env, "oracle.embedding");
            read(*e, "cache_path", c.embedding.cache_path, "oracle.embedding");
        }
    }
    if (auto it = j.find("evolution"); it != j.end()) {
        const json& e = *it;
        reject_unknown(e, "evolution",
                       {"theta_entity", "theta_relation", "gamma", "delta", "align_topk", "context_cap", "fail_fast"});
        read(e, "theta_entity", c.evolution.theta_entity, "evolution");
        read(e, "theta_relation", c.evolution.theta_relation, "evolution");
        read(e, "gamma", c.evolution.gamma, "evolution");
        read(e, "delta", c.evolution.delta, "evolution");
        read(e, "align_topk", c.evolution.align_topk, "evolution");
        read(e, "context_cap", c.evolution.context_cap, "evolution");
        read(e, "fail_fast", c.evolution.fail_fast, "evolution");
    }
    if (auto it = j.find("reasoner"); it != j.end()) {
        const json& r = *it;
        reject_unknown(r, "reasoner",
                       {"n_routes", "k_candidates", "k_anchors", "beam_width", "max_depth", "default_hops",
                        "consensus_min", "dedup_threshold", "oracle_budget"});
        read(r, "n_routes", c.reasoner.n_routes, "reasoner");
        read(r, "k_candidates", c.reasoner.k_candidates, "reasoner");
        read(r, "k_anchors", c.reasoner.k_anchors, "reasoner");
        read(r, "beam_width", c.reasoner.beam_width, "reasoner");
        read(r, "max_depth", c.reasoner.max_depth, "reasoner");
        read(r, "default_hops", c.reasoner.default_hops, "reasoner");
        read(r, "consensus_min", c.reasoner.consensus_min, "reasoner");
        read(r, "dedup_threshold", c.reasoner.dedup_threshold, "reasoner");
        read(r, "oracle_budget", c.reasoner.oracle_budget, "reasoner");
    }
    if (auto it = j.find("eval"); it != j.end()) {
        const json& e = *it;
        reject_unknown(e, "eval", {"runs", "seed", "jobs"});
        read(e, "runs", c.eval.runs, "eval");
        read(e, "seed", c.eval.seed, "eval");
        read(e, "jobs", c.eval.jobs, "eval");
    }
    c.validate();
    return c;
}

json config_to_json(const AppConfig& c) {
    return {{"oracle",
             {{"backend", c.oracle.backend == OracleConfig::Backend::remote ? "remote" : "deterministic"},
              {"endpoint_url", c.oracle.endpoint_url},
              {"model_name", c.oracle.model_name},
              {"api_key_env", c.oracle.api_key_env},
              {"temperature", c.oracle.temperature},
              {"max_retries", c.oracle.max_retries},
              {"domain_label", c.oracle.domain_label},
              {"max_in_flight", c.oracle.max_in_flight},
              {"timeout_seconds", c.oracle.timeout_seconds},
              {"embedding",
               {{"backend", c.embedding.backend == EmbeddingConfig::Backend::remote ? "remote" : "hash"},
                {"dimension", c.embedding.dimension},
                {"endpoint_url", c.embedding.endpoint_url},
                {"model_name", c.embedding.model_name},
                {"api_key_env", c.embedding.api_key_env},
                {"cache_path", c.embedding.cache_path}}}}},
            {"evolution",
             {{"theta_entity", c.evolution.theta_entity},
              {"theta_relation", c.evolution.theta_relation},
              {"gamma", c.evolution.gamma},
              {"delta", c.evolution.delta},
              {"align_topk", c.evolution.align_topk},
              {"context_cap", c.evolution.context_cap},
              {"fail_fast", c.evolution.fail_fast}}},
            {"reasoner",
             {{"n_routes", c.reasoner.n_routes},
              {"k_candidates", c.reasoner.k_candidates},
              {"k_anchors", c.reasoner.k_anchors},
              {"beam_width", c.reasoner.beam_width},
              {"max_depth", c.reasoner.max_depth},
              {"default_hops", c.reasoner.default_hops},
              {"consensus_min", c.reasoner.consensus_min},
              {"dedup_threshold", c.reasoner.dedup_threshold},
              {"oracle_budget", c.reasoner.oracle_budget}}},
            {"eval", {{"runs", c.eval.runs}, {"seed", c.eval.seed}, {"jobs", c.eval.jobs}}}};
}

AppConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config " + path.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

std::shared_ptr<const Encoder> make_encoder(const EmbeddingConfig& config) {
    if (config.backend == EmbeddingConfig::Backend::remote) {
        return std::make_shared<RemoteEncoder>(RemoteEncoderConfig{
            config.endpoint_url, config.model_name, config.api_key_env, config.dimension, config.cache_path});
    }
    return std::make_shared<HashEncoder>(config.dimension);
}

} // namespace tkg
