#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "semcache/errors.hpp"
#include "semcache/text.hpp"

namespace semcache {

struct Embedding {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }

    bool operator==(const Embedding& other) const { return values == other.values; }
};

inline double cosine_similarity(const Embedding& a, const Embedding& b) {
    if (a.dim() != b.dim())
        throw ValidationError("cosine_similarity: dimension mismatch (" +
                              std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0)
        throw ValidationError("cosine_similarity: zero vector");
    double c = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(c, -1.0, 1.0);
}

// Maps cosine from [-1, 1] onto the shared scorer domain [0, 1].
inline double rescale_cosine(double c) { return (c + 1.0) / 2.0; }

enum class EmbeddingKind { remote, deterministic_local };

struct EmbeddingProviderConfig {
    EmbeddingKind kind = EmbeddingKind::deterministic_local;
    std::optional<std::string> endpoint_url;
    std::optional<std::string> model_name;
    std::size_t dim = 256;
    int timeout_ms = 10000;
    int max_retries = 3;
    int retry_base_delay_ms = 500;
    int max_in_flight = 4;

    void validate() const {
        if (dim == 0)
            throw ValidationError("embedding config: dim must be positive");
        if (timeout_ms <= 0)
            throw ValidationError("embedding config: timeout_ms must be positive");
        if (max_retries < 0)
            throw ValidationError("embedding config: max_retries must be non-negative");
        if (kind == EmbeddingKind::remote && (!endpoint_url || !model_name))
            throw ValidationError("embedding config: remote provider needs endpoint_url and model_name");
    }
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::size_t dim() const = 0;

    // Stable description of the provider, echoed into reports for provenance.
    virtual std::string fingerprint() const = 0;

    // One embedding per input text, order preserved. Safe to call concurrently.
    virtual std::vector<Embedding> embed(const std::vector<std::string>& texts) const = 0;

    Embedding embed_one(const std::string& text) const {
        return embed(std::vector<std::string>{text}).front();
    }

protected:
    static void require_embeddable(const std::vector<std::string>& texts) {
        if (texts.empty())
            throw ValidationError("embed: texts must be non-empty");
        for (const std::string& t : texts)
            if (trim(t).empty())
                throw ValidationError("embed: text is empty after trim");
    }
};

namespace detail {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

inline std::uint64_t fnv1a64(const std::string& data, std::uint64_t seed) {
    std::uint64_t h = kFnvOffset ^ seed;
    for (char c : data) {
        h ^= static_cast<std::uint8_t>(c);
        h *= kFnvPrime;
    }
    return h;
}

} // namespace detail

// Token hash seed, pinned so fixtures stay valid forever ("SEMCACHE" in ASCII).
inline constexpr std::uint64_t kTokenHashSeed = 0x53454D4341434845ULL;

// Deterministic bag-of-tokens embedder (the hashing trick):
// lowercase, split on non-alphanumeric runs, hash each token with seeded
// FNV-1a 64, bucket = hash mod dim, sign from bit 63, accumulate, L2-normalize.
// Similarity between outputs tracks token overlap, which lets tests engineer
// exact hit/miss scenarios. Pure function of the text bytes.
class FeatureHashEmbedder : public EmbeddingProvider {
public:
    explicit FeatureHashEmbedder(std::size_t dim = 256, std::uint64_t seed = kTokenHashSeed)
        : dim_(dim), seed_(seed) {
        if (dim_ == 0)
            throw ValidationError("FeatureHashEmbedder: dim must be positive");
    }

    std::size_t dim() const override { return dim_; }

    std::string fingerprint() const override {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "feature_hash_v1:dim=%zu:seed=0x%016llx", dim_,
                      static_cast<unsigned long long>(seed_));
        return buf;
    }

    std::vector<Embedding> embed(const std::vector<std::string>& texts) const override {
        if (texts.empty())
            throw ValidationError("embed: texts must be non-empty");
        std::vector<Embedding> out;
        out.reserve(texts.size());
        for (const std::string& text : texts)
            out.push_back(embed_text(text));
        return out;
    }

private:
    Embedding embed_text(const std::string& text) const {
        if (trim(text).empty())
            throw ValidationError("embed: text is empty after trim");
        std::vector<std::string> tokens = tokenize(text);
        if (tokens.empty())
            throw ValidationError("embed: text has no alphanumeric tokens: \"" + text + "\"");
        Embedding e;
        e.values.assign(dim_, 0.0);
        for (const std::string& tok : tokens) {
            std::uint64_t h = detail::fnv1a64(tok, seed_);
            std::size_t bucket = static_cast<std::size_t>(h % dim_);
            double sign = (h >> 63) ? -1.0 : 1.0;
            e.values[bucket] += sign;
        }
        double norm_sq = 0.0;
        for (double v : e.values)
            norm_sq += v * v;
        if (norm_sq == 0.0)
            throw ValidationError("embed: token signs cancelled to a zero vector: \"" + text + "\"");
        double norm = std::sqrt(norm_sq);
        for (double& v : e.values)
            v /= norm;
        return e;
    }

    std::size_t dim_;
    std::uint64_t seed_;
};

} // namespace semcache
