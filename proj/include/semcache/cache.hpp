#pragma once

#include <list>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "semcache/embedding.hpp"
#include "semcache/errors.hpp"
#include "semcache/scorer.hpp"
#include "semcache/vector_store.hpp"

namespace semcache {

struct CacheEntry {
    std::string entry_id;
    std::string query_text;
    Embedding embedding;
    std::string answer;
    // Ground-truth provenance for the evaluation harness. Lookup and
    // eviction never read it.
    std::optional<std::string> group_id;
    std::uint64_t last_access = 0;
};

struct CacheConfig {
    double threshold = 0.9;
    std::size_t top_k_candidates = 5;
    std::size_t capacity = 0; // 0 = unbounded

    void validate() const {
        if (threshold < 0.0 || threshold > 1.0)
            throw ValidationError("cache config: threshold must be in [0, 1]");
        if (top_k_candidates == 0)
            throw ValidationError("cache config: top_k_candidates must be positive");
    }
};

struct LookupResult {
    bool hit = false;
    std::optional<CacheEntry> entry; // present iff hit
    std::optional<double> score;     // present iff hit
    // Diagnostics: the best-scoring candidate even when it fell short of
    // the threshold, for miss analysis and calibration output.
    std::optional<double> nearest_score;
    std::optional<std::string> nearest_entry_id;
    std::size_t candidates_considered = 0;
};

struct CacheStats {
    std::uint64_t lookups = 0;
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t insertions = 0;
    std::uint64_t evictions = 0;
};

// Embedding-backed answer cache with two-stage lookup: top-k nearest
// neighbors by raw cosine, then a relevance scorer whose best result is
// compared against the threshold. Score ties prefer higher raw cosine,
// then earlier insertion. Eviction is least-recently-used; a hit
// refreshes only the matched entry and never inserts anything.
class SemanticCache {
  public:
    SemanticCache(CacheConfig config, std::shared_ptr<EmbeddingProvider> embedder,
                  std::shared_ptr<SimilarityScorer> scorer)
        : config_(config), embedder_(std::move(embedder)), scorer_(std::move(scorer)),
          store_(embedder_ ? embedder_->dim() : 1) {
        config_.validate();
        if (!embedder_)
            throw ValidationError("cache: embedder is required");
        if (!scorer_)
            throw ValidationError("cache: scorer is required");
    }

    const CacheConfig& config() const { return config_; }
    const EmbeddingProvider& embedder() const { return *embedder_; }
    const SimilarityScorer& scorer() const { return *scorer_; }

    std::size_t size() const { return entries_.size(); }
    const CacheStats& stats() const { return stats_; }

    LookupResult lookup(const std::string& query_text) {
        return lookup(query_text, embedder_->embed_one(query_text));
    }

    LookupResult lookup(const std::string& query_text, const Embedding& query_embedding) {
        if (query_text.empty())
            throw ValidationError("cache lookup: query_text must be non-empty");
        ++stats_.lookups;
        LookupResult result;
        if (entries_.empty()) {
            ++stats_.misses;
            return result;
        }
        std::vector<Neighbor> neighbors = store_.top_k(query_embedding, config_.top_k_candidates);
        result.candidates_considered = neighbors.size();

        std::vector<ScoreCandidate> candidates;
        candidates.reserve(neighbors.size());
        for (const Neighbor& n : neighbors) {
            const CacheEntry& e = entries_.at(n.entry_id);
            candidates.push_back({&e.query_text, &e.embedding});
        }
        std::vector<double> scores = scorer_->score_batch(query_text, query_embedding, candidates);
        if (scores.size() != neighbors.size())
            throw ContractViolation("scorer returned " + std::to_string(scores.size()) +
                                    " scores for " + std::to_string(neighbors.size()) +
                                    " candidates");

        // neighbors is sorted by raw cosine desc then insertion order, so
        // keeping the first index among equal scores applies the tie rule.
        std::size_t best = 0;
        for (std::size_t i = 1; i < scores.size(); ++i)
            if (scores[i] > scores[best])
                best = i;

        result.nearest_score = scores[best];
        result.nearest_entry_id = neighbors[best].entry_id;
        if (scores[best] >= config_.threshold) {
            result.hit = true;
            result.score = scores[best];
            CacheEntry& e = entries_.at(neighbors[best].entry_id);
            touch(e);
            result.entry = e;
            ++stats_.hits;
        } else {
            ++stats_.misses;
        }
        return result;
    }

    std::string insert(const std::string& query_text, const std::string& answer,
                       std::optional<std::string> group_id = std::nullopt) {
        return insert(query_text, embedder_->embed_one(query_text), answer, std::move(group_id));
    }

    std::string insert(const std::string& query_text, const Embedding& embedding,
                       const std::string& answer,
                       std::optional<std::string> group_id = std::nullopt) {
        if (query_text.empty())
            throw ValidationError("cache insert: query_text must be non-empty");
        if (config_.capacity > 0 && entries_.size() >= config_.capacity)
            evict_lru();
        CacheEntry entry;
        entry.entry_id = "e" + std::to_string(next_entry_id_++);
        entry.query_text = query_text;
        entry.embedding = embedding;
        entry.answer = answer;
        entry.group_id = std::move(group_id);
        entry.last_access = ++clock_;

        store_.insert(entry.entry_id, entry.embedding);
        recency_.push_back(entry.entry_id);
        recency_pos_[entry.entry_id] = std::prev(recency_.end());
        std::string id = entry.entry_id;
        entries_.emplace(id, std::move(entry));
        ++stats_.insertions;
        return id;
    }

    const CacheEntry* find(const std::string& entry_id) const {
        auto it = entries_.find(entry_id);
        return it == entries_.end() ? nullptr : &it->second;
    }

    // Entry ids from least to most recently accessed.
    std::vector<std::string> lru_order() const { return {recency_.begin(), recency_.end()}; }

    std::vector<const CacheEntry*> entries() const {
        std::vector<const CacheEntry*> out;
        out.reserve(entries_.size());
        for (const std::string& id : recency_)
            out.push_back(&entries_.at(id));
        return out;
    }

  private:
    void touch(CacheEntry& entry) {
        entry.last_access = ++clock_;
        auto it = recency_pos_.find(entry.entry_id);
        recency_.splice(recency_.end(), recency_, it->second);
    }

    void evict_lru() {
        const std::string victim = recency_.front();
        recency_.pop_front();
        recency_pos_.erase(victim);
        store_.remove(victim);
        entries_.erase(victim);
        ++stats_.evictions;
    }

    CacheConfig config_;
    std::shared_ptr<EmbeddingProvider> embedder_;
    std::shared_ptr<SimilarityScorer> scorer_;
    VectorStore store_;
    std::unordered_map<std::string, CacheEntry> entries_;
    std::list<std::string> recency_;
    std::unordered_map<std::string, std::list<std::string>::iterator> recency_pos_;
    CacheStats stats_;
    std::uint64_t next_entry_id_ = 0;
    std::uint64_t clock_ = 0;
};

} // namespace semcache
