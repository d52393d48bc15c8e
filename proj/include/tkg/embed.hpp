#pragma once

// Text encoders, cosine similarity and exact top-k retrieval.

#include "tkg/graph.hpp"
#include "tkg/http.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace tkg {

struct Vector {
    std::vector<double> components;

    std::size_t dimension() const noexcept { return components.size(); }
    bool is_zero() const noexcept;
    double norm() const noexcept;

    friend bool operator==(const Vector&, const Vector&) = default;
};

class Encoder {
public:
    virtual ~Encoder() = default;
    // Unit-norm vector, or the zero vector for empty/whitespace-only input.
    virtual Vector encode(std::string_view text) const = 0;
    virtual std::size_t dimension() const noexcept = 0;
};

// 64-bit FNV-1a (offset basis 0xcbf29ce484222325, prime 0x100000001b3).
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

// Feature-hashing bag of words. Features are the tokens of tkg::tokenize and
// every adjacent pair joined by one space. Each feature hashes with fnv1a64;
// bucket = hash % dimension, sign = -1 if bit 63 is set else +1. The bucket
// sums are L2-normalized.
class HashEncoder final : public Encoder {
public:
    explicit HashEncoder(std::size_t dimension = 256);
    Vector encode(std::string_view text) const override;
    std::size_t dimension() const noexcept override { return dimension_; }

private:
    std::size_t dimension_;
};

struct RemoteEncoderConfig {
    std::string endpoint_url;  // base url; "/embeddings" is appended
    std::string model_name;
    std::string api_key_env;
    std::size_t dimension = 0;  // 0: taken from the first response
    std::filesystem::path cache_path;  // optional JSONL cache
};

// OpenAI-compatible embeddings client. Vectors are cached by input hash and
// L2-normalized on receipt.
class RemoteEncoder final : public Encoder {
public:
    explicit RemoteEncoder(RemoteEncoderConfig config, HttpPost post = default_http_post());
    Vector encode(std::string_view text) const override;
    std::size_t dimension() const noexcept override;

    // Cache file records: {"input_hash", "dimension", "components"}.
    void save_cache() const;
    std::size_t cache_size() const;

private:
    void load_cache();

    RemoteEncoderConfig config_;
    HttpPost post_;
    mutable std::mutex mutex_;
    mutable std::map<std::string, Vector> cache_;
    mutable std::size_t dimension_;
};

// Canonical serialization templates.
std::string entity_text(std::string_view type, std::string_view name, std::string_view description);
std::string mention_text(std::string_view mention, std::string_view temporal_context);
std::string schema_text(std::string_view subject_type, std::string_view relation, std::string_view object_type);

// Throw ValidationError when the mandatory field (name / mention / relation) is empty.
Vector encode_entity(const Encoder& encoder, std::string_view type, std::string_view name,
                     std::string_view description);
Vector encode_mention_with_time(const Encoder& encoder, std::string_view mention, std::string_view temporal_context);
Vector encode_schema(const Encoder& encoder, std::string_view subject_type, std::string_view relation,
                     std::string_view object_type);

// Throws ValidationError on dimension mismatch; 0 when either side is zero.
double cosine_sim(const Vector& a, const Vector& b);

struct ScoredKey {
    std::string key;
    double score = 0.0;

    friend bool operator==(const ScoredKey&, const ScoredKey&) = default;
};

class EmbeddingIndex {
public:
    struct Item {
        std::string key;
        Vector vector;
        std::string text;
    };

    explicit EmbeddingIndex(std::size_t dimension) : dimension_(dimension) {}

    // Appends; throws ValidationError on duplicate key or wrong dimension.
    void add(std::string key, Vector vector, std::string text);
    // Replaces the item under `key`, or appends it.
    void set(std::string key, Vector vector, std::string text);
    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t size() const noexcept { return items_.size(); }
    bool empty() const noexcept { return items_.empty(); }
    const std::vector<Item>& items() const noexcept { return items_; }

private:
    std::size_t dimension_;
    std::vector<Item> items_;
    std::map<std::string, std::size_t> positions_;
};

// Exact scan: descending score, ties by ascending key, at most k results.
std::vector<ScoredKey> topk(const EmbeddingIndex& index, const Vector& query, std::size_t k);

// Entity index keyed by entity id over entity_text(type, name, description).
EmbeddingIndex build_entity_index(const GraphStore& store, const Encoder& encoder);

// Schema key used by the schema index: "subject_type\x1frelation\x1fobject_type".
std::string schema_key(const RelationSchema& schema);
EmbeddingIndex build_schema_index(const GraphStore& store, const Encoder& encoder);

} // namespace tkg
