#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "semcache/embedding.hpp"
#include "semcache/errors.hpp"

namespace semcache {

using json = nlohmann::json;

struct Neighbor {
    std::string entry_id;
    double score = 0.0; // raw cosine in [-1, 1]

    bool operator==(const Neighbor&) const = default;
};

// Exact brute-force nearest-neighbor index over raw cosine similarity.
// Ties are broken by insertion order (earlier insert wins), which keeps
// replay results reproducible regardless of sort internals.
class VectorStore {
  public:
    explicit VectorStore(std::size_t dim) : dim_(dim) {
        if (dim == 0)
            throw ValidationError("vector store: dim must be positive");
    }

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return order_.size(); }
    bool empty() const { return order_.empty(); }

    bool contains(const std::string& id) const { return by_id_.count(id) != 0; }

    void insert(const std::string& id, const Embedding& embedding) {
        if (id.empty())
            throw ValidationError("vector store: id must be non-empty");
        if (embedding.dim() != dim_)
            throw ValidationError("vector store: embedding dim " +
                                  std::to_string(embedding.dim()) + " does not match store dim " +
                                  std::to_string(dim_));
        if (by_id_.count(id))
            throw ValidationError("vector store: duplicate id \"" + id + "\"");
        by_id_.emplace(id, Entry{embedding, next_ordinal_});
        order_.push_back(id);
        ++next_ordinal_;
    }

    bool remove(const std::string& id) {
        auto it = by_id_.find(id);
        if (it == by_id_.end())
            return false;
        by_id_.erase(it);
        order_.erase(std::find(order_.begin(), order_.end(), id));
        return true;
    }

    const Embedding* find(const std::string& id) const {
        auto it = by_id_.find(id);
        return it == by_id_.end() ? nullptr : &it->second.embedding;
    }

    // Up to k nearest entries by raw cosine, highest first. Equal similarities
    // keep insertion order. k = 0 is a usage error; an empty store returns {}.
    std::vector<Neighbor> top_k(const Embedding& query, std::size_t k) const {
        if (k == 0)
            throw ValidationError("vector store: k must be positive");
        if (query.dim() != dim_)
            throw ValidationError("vector store: query dim " + std::to_string(query.dim()) +
                                  " does not match store dim " + std::to_string(dim_));
        struct Scored {
            double score;
            std::uint64_t ordinal;
            const std::string* id;
        };
        std::vector<Scored> scored;
        scored.reserve(order_.size());
        for (const std::string& id : order_) {
            const Entry& e = by_id_.at(id);
            scored.push_back({cosine_similarity(query, e.embedding), e.ordinal, &id});
        }
        std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
            if (a.score != b.score)
                return a.score > b.score;
            return a.ordinal < b.ordinal;
        });
        if (scored.size() > k)
            scored.resize(k);
        std::vector<Neighbor> out;
        out.reserve(scored.size());
        for (const Scored& s : scored)
            out.push_back({*s.id, s.score});
        return out;
    }

    // Ids in insertion order (oldest first).
    std::vector<std::string> ids() const { return order_; }

    json snapshot() const {
        json entries = json::array();
        for (const std::string& id : order_)
            entries.push_back({{"entry_id", id}, {"values", by_id_.at(id).embedding.values}});
        return {{"dim", dim_}, {"entries", entries}};
    }

    static VectorStore from_snapshot(const json& j) {
        VectorStore store(j.at("dim").get<std::size_t>());
        for (const json& e : j.at("entries")) {
            Embedding emb;
            emb.values = e.at("values").get<std::vector<double>>();
            store.insert(e.at("entry_id").get<std::string>(), emb);
        }
        return store;
    }

  private:
    struct Entry {
        Embedding embedding;
        std::uint64_t ordinal;
    };

    std::size_t dim_;
    std::uint64_t next_ordinal_ = 0;
    std::unordered_map<std::string, Entry> by_id_;
    std::vector<std::string> order_;
};

} // namespace semcache
