#pragma once

// Synthetic worlds for end-to-end tests: a ground-truth graph, a degraded copy
// with people and movies removed, documents restating the removed facts (with
// minority contradicting values for exclusive slots), and questions with gold
// answers.

#include "json.hpp"
#include "tkg/config.hpp"
#include "tkg/eval.hpp"
#include "tkg/graph.hpp"
#include "tkg/oracle.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

namespace tkg {

struct WorldSpec {
    std::int64_t seed = 7;
    std::size_t n_entities = 20;
    std::size_t n_relations = 6;
    double exclusive_fraction = 0.34;
    Timestamp span_start = Timestamp::from_date(1990, 1, 1);
    Timestamp span_end = Timestamp::from_date(2020, 12, 31);
    double removal_fraction = 0.4;
    double noise_rate = 0.2;
    std::size_t n_questions = 12;
    std::size_t max_attempts = 8;

    void validate() const;
};

WorldSpec world_spec_from_json(const nlohmann::json& j);
nlohmann::json world_spec_to_json(const WorldSpec& spec);

struct World {
    WorldSpec spec;
    std::int64_t effective_seed = 0;  // differs from spec.seed after a reseed
    GraphStore truth;
    GraphStore degraded;
    std::vector<Document> corpus;
    std::vector<QAItem> questions;
    AppConfig config;  // settings the world was checked against
    std::vector<EntityId> removed;  // truth ids
};

// Tag carried by questions whose answer path touches a removed fact.
inline constexpr const char* kRecoveryTag = "recovery";

// Deterministic in its WorldSpec argument. Retries with a derived seed when the sampled
// world has no sound question that depends on removed facts; throws
// ValidationError after spec.max_attempts.
World generate_world(const WorldSpec& spec);

// Writes truth.jsonl, degraded.jsonl, corpus.jsonl, qa.jsonl, config.json
// and world.json into `dir`.
void write_world(const World& world, const std::filesystem::path& dir);

// Seeded generator with portable bounded draws (the standard distributions
// are implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t below(std::uint64_t bound);  // uniform in [0, bound)
    std::int64_t between(std::int64_t lo, std::int64_t hi);  // inclusive
    double unit();  // [0,1)
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace tkg
