#pragma once

// Application configuration: one JSON file with sections oracle, evolution,
// reasoner and eval. Every field has a default; missing keys keep it.

#include "json.hpp"
#include "tkg/embed.hpp"
#include "tkg/eval.hpp"
#include "tkg/evolve.hpp"
#include "tkg/oracle.hpp"
#include "tkg/reason.hpp"

#include <filesystem>
#include <memory>

namespace tkg {

struct EmbeddingConfig {
    enum class Backend { hash, remote };

    Backend backend = Backend::hash;
    std::size_t dimension = 256;
    std::string endpoint_url;
    std::string model_name;
    std::string api_key_env = "OPENAI_API_KEY";
    std::string cache_path;
};

struct AppConfig {
    OracleConfig oracle;
    EmbeddingConfig embedding;  // lives under oracle.embedding in the file
    EvolutionConfig evolution;
    ReasonerConfig reasoner;
    EvalOptions eval;

    void validate() const;
};

// Unknown keys are rejected so typos do not silently fall back to defaults.
AppConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const AppConfig& config);
AppConfig load_config(const std::filesystem::path& path);

std::shared_ptr<const Encoder> make_encoder(const EmbeddingConfig& config);

} // namespace tkg
