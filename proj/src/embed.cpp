#include "tkg/embed.hpp"

#include "tkg/error.hpp"
#include "tkg/json_io.hpp"
#include "tkg/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

namespace tkg {

bool Vector::is_zero() const noexcept {
    return std::all_of(components.begin(), components.end(), [](double x) { return x == 0.0; });
}

double Vector::norm() const noexcept {
    double sum = 0.0;
    for (const double x : components) {
        sum += x * x;
    }
    return std::sqrt(sum);
}

namespace {

void normalize(Vector& v) {
    const double n = v.norm();
    if (n > 0.0) {
        for (double& x : v.components) {
            x /= n;
        }
    }
}

std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

HashEncoder::HashEncoder(std::size_t dimension) : dimension_(dimension) {
    if (dimension == 0) {
        throw ValidationError("encoder dimension must be positive");
    }
}

Vector HashEncoder::encode(std::string_view text) const {
    Vector v{std::vector<double>(dimension_, 0.0)};
    const auto tokens = tokenize(text);
    auto add = [&](std::string_view feature) {
        const std::uint64_t h = fnv1a64(feature);
        v.components[h % dimension_] += (h >> 63) ? -1.0 : 1.0;
    };
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        add(tokens[i]);
        if (i + 1 < tokens.size()) {
            add(tokens[i] + " " + tokens[i + 1]);
        }
    }
    normalize(v);
    return v;
}

RemoteEncoder::RemoteEncoder(RemoteEncoderConfig config, HttpPost post)
    : config_(std::move(config)), post_(std::move(post)), dimension_(config_.dimension) {
    if (config_.endpoint_url.empty() || config_.model_name.empty()) {
        throw ConfigError("remote encoder requires endpoint_url and model_name");
    }
    load_cache();
}

std::size_t RemoteEncoder::dimension() const noexcept {
    std::lock_guard lock(mutex_);
    return dimension_;
}

std::size_t RemoteEncoder::cache_size() const {
    std::lock_guard lock(mutex_);
    return cache_.size();
}

void RemoteEncoder::load_cache() {
    if (config_.cache_path.empty() || !std::filesystem::exists(config_.cache_path)) {
        return;
    }
    std::ifstream in(config_.cache_path);
    for_each_jsonl(in, [&](const json& record, std::size_t line) {
        Vector v{record.at("components").get<std::vector<double>>()};
        if (v.dimension() != record.at("dimension").get<std::size_t>()) {
            throw ParseError("cache dimension does not match components", line);
        }
        if (dimension_ == 0) {
            dimension_ = v.dimension();
        }
        cache_[record.at("input_hash").get<std::string>()] = std::move(v);
    });
}

void RemoteEncoder::save_cache() const {
    if (config_.cache_path.empty()) {
        return;
    }
    std::lock_guard lock(mutex_);
    std::ofstream out(config_.cache_path, std::ios::binary);
    for (const auto& [hash, v] : cache_) {
        out << json{{"input_hash", hash}, {"dimension", v.dimension()}, {"components", v.components}}.dump() << '\n';
    }
}

Vector RemoteEncoder::encode(std::string_view text) const {
    if (trim(text).empty()) {
        std::lock_guard lock(mutex_);
        return Vector{std::vector<double>(dimension_, 0.0)};
    }
    const std::string hash = hex64(fnv1a64(config_.model_name + '\n' + std::string(text)));
    {
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find(hash); it != cache_.end()) {
            return it->second;
        }
    }
    HttpHeaders headers;
    if (!config_.api_key_env.empty()) {
        if (const char* key = std::getenv(config_.api_key_env.c_str())) {
            headers.emplace_back("Authorization", std::string("Bearer ") + key);
        }
    }
    const json request{{"model", config_.model_name}, {"input", std::string(text)}};
    const std::string body = post_(config_.endpoint_url + "/embeddings", request.dump(), headers);
    Vector v;
    try {
        v.components = json::parse(body).at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed embeddings response: ") + e.what());
    }
    normalize(v);
    std::lock_guard lock(mutex_);
    if (dimension_ == 0) {
        dimension_ = v.dimension();
    } else if (v.dimension() != dimension_) {
        throw TransportError("embedding dimension " + std::to_string(v.dimension()) + " does not match " +
                             std::to_string(dimension_));
    }
    cache_[hash] = v;
    return v;
}

std::string entity_text(std::string_view type, std::string_view name, std::string_view description) {
    std::string out = "type: ";
    out.append(type).append(" | name: ").append(name).append(" | desc: ").append(description);
    return out;
}

std::string mention_text(std::string_view mention, std::string_view temporal_context) {
    std::string out = "mention: ";
    out.append(mention).append(" | time: ").append(temporal_context);
    return out;
}

std::string schema_text(std::string_view subject_type, std::string_view relation, std::string_view object_type) {
    std::string out(subject_type);
    out.append(" -[").append(relation).append("]-> ").append(object_type);
    return out;
}

Vector encode_entity(const Encoder& encoder, std::string_view type, std::string_view name,
                     std::string_view description) {
    if (trim(name).empty()) {
        throw ValidationError("entity name must be non-empty");
    }
    return encoder.encode(entity_text(type, name, description));
}

Vector encode_mention_with_time(const Encoder& encoder, std::string_view mention, std::string_view temporal_context) {
    if (trim(mention).empty()) {
        throw ValidationError("mention must be non-empty");
    }
    return encoder.encode(mention_text(mention, temporal_context));
}

Vector encode_schema(const Encoder& encoder, std::string_view subject_type, std::string_view relation,
                     std::string_view object_type) {
    if (trim(relation).empty()) {
        throw ValidationError("relation must be non-empty");
    }
    return encoder.encode(schema_text(subject_type, relation, object_type));
}

double cosine_sim(const Vector& a, const Vector& b) {
    if (a.dimension() != b.dimension()) {
        throw ValidationError("cosine_sim dimension mismatch: " + std::to_string(a.dimension()) + " vs " +
                              std::to_string(b.dimension()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.dimension(); ++i) {
        dot += a.components[i] * b.components[i];
        na += a.components[i] * a.components[i];
        nb += b.components[i] * b.components[i];
    }
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

void EmbeddingIndex::add(std::string key, Vector vector, std::string text) {
    if (vector.dimension() != dimension_) {
        throw ValidationError("index dimension " + std::to_string(dimension_) + " does not match vector dimension " +
                              std::to_string(vector.dimension()));
    }
    if (positions_.contains(key)) {
        throw ValidationError("duplicate index key '" + key + "'");
    }
    positions_.emplace(key, items_.size());
    items_.push_back({std::move(key), std::move(vector), std::move(text)});
}

void EmbeddingIndex::set(std::string key, Vector vector, std::string text) {
    if (auto it = positions_.find(key); it != positions_.end()) {
        if (vector.dimension() != dimension_) {
            throw ValidationError("index dimension mismatch");
        }
        items_[it->second].vector = std::move(vector);
        items_[it->second].text = std::move(text);
        return;
    }
    add(std::move(key), std::move(vector), std::move(text));
}

std::vector<ScoredKey> topk(const EmbeddingIndex& index, const Vector& query, std::size_t k) {
    if (k == 0) {
        throw ValidationError("topk requires k >= 1");
    }
    std::vector<ScoredKey> scored;
    scored.reserve(index.size());
    for (const auto& item : index.items()) {
        scored.push_back({item.key, cosine_sim(query, item.vector)});
    }
    auto better = [](const ScoredKey& a, const ScoredKey& b) {
        return a.score != b.score ? a.score > b.score : a.key < b.key;
    };
    const std::size_t n = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(), better);
    scored.resize(n);
    return scored;
}

EmbeddingIndex build_entity_index(const GraphStore& store, const Encoder& encoder) {
    EmbeddingIndex index(encoder.dimension());
    for (const auto& [id, e] : store.entities()) {
        std::string text = entity_text(e.type, e.name, e.description);
        Vector vector = encoder.encode(text);
        index.add(id, std::move(vector), std::move(text));
    }
    return index;
}

std::string schema_key(const RelationSchema& schema) {
    return schema.subject_type + '\x1f' + schema.relation + '\x1f' + schema.object_type;
}

EmbeddingIndex build_schema_index(const GraphStore& store, const Encoder& encoder) {
    EmbeddingIndex index(encoder.dimension());
    for (const auto& [_, s] : store.schemas()) {
        std::string text = schema_text(s.subject_type, s.relation, s.object_type);
        Vector vector = encoder.encode(text);
        index.add(schema_key(s), std::move(vector), std::move(text));
    }
    return index;
}

} // namespace tkg
