#pragma once

// Brute-force replay oracle. Re-simulates a full cache replay with its own
// similarity computation, candidate selection, recency bookkeeping, and
// outcome classification, sharing no logic with the cache implementation.
// Agreement between this and replay() is the harness's primary check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "semcache/dataset.hpp"
#include "semcache/embedding.hpp"
#include "semcache/evaluation.hpp"

namespace oracle {

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    double c = dot / (std::sqrt(na) * std::sqrt(nb));
    if (c > 1.0)
        c = 1.0;
    if (c < -1.0)
        c = -1.0;
    return c;
}

struct OracleSettings {
    double threshold = 0.9;
    std::size_t top_k = 5;
    std::size_t capacity = 0; // 0 = unbounded
    semcache::InsertPolicy insert_policy = semcache::InsertPolicy::on_miss;
};

inline std::vector<semcache::EvalRecord>
oracle_replay(const semcache::ReplayPlan& plan, const semcache::EmbeddingProvider& embedder,
              const OracleSettings& s) {
    struct Stored {
        std::string group;
        std::vector<double> values;
        std::uint64_t inserted_at;
        std::uint64_t last_access;
        bool alive;
    };
    std::vector<Stored> stored;
    std::uint64_t clock = 0;
    std::vector<semcache::EvalRecord> records;

    for (std::size_t qi = 0; qi < plan.queries.size(); ++qi) {
        const semcache::PlannedQuery& q = plan.queries[qi];
        std::vector<double> emb = embedder.embed_one(q.query_text).values;

        bool expected = false;
        for (const Stored& e : stored)
            if (e.alive && e.group == q.group_id) {
                expected = true;
                break;
            }

        std::vector<std::size_t> alive;
        for (std::size_t i = 0; i < stored.size(); ++i)
            if (stored[i].alive)
                alive.push_back(i);

        semcache::EvalRecord rec;
        rec.query = q.query_text;
        rec.group_id = q.group_id;
        rec.sequence_index = qi;

        bool hit = false;
        std::optional<std::size_t> matched;
        if (!alive.empty()) {
            std::vector<double> sims(alive.size());
            for (std::size_t i = 0; i < alive.size(); ++i)
                sims[i] = cosine(emb, stored[alive[i]].values);
            // candidate stage: top_k by raw cosine, ties to earlier insertion
            std::vector<std::size_t> order(alive.size());
            for (std::size_t i = 0; i < order.size(); ++i)
                order[i] = i;
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                if (sims[a] != sims[b])
                    return sims[a] > sims[b];
                return stored[alive[a]].inserted_at < stored[alive[b]].inserted_at;
            });
            if (order.size() > s.top_k)
                order.resize(s.top_k);
            // scorer stage: rescaled cosine, best score, ties keep stage order
            std::size_t best = order[0];
            double best_score = (sims[best] + 1.0) / 2.0;
            for (std::size_t oi = 1; oi < order.size(); ++oi) {
                double score = (sims[order[oi]] + 1.0) / 2.0;
                if (score > best_score) {
                    best_score = score;
                    best = order[oi];
                }
            }
            rec.similarity_score = best_score;
            if (best_score >= s.threshold) {
                hit = true;
                matched = alive[best];
            }
        }

        if (hit) {
            Stored& m = stored[*matched];
            rec.matched_group_id = m.group;
            rec.outcome = m.group == q.group_id ? semcache::Outcome::correct_hit
                                                : semcache::Outcome::incorrect_hit;
            m.last_access = ++clock;
        } else {
            rec.outcome = expected ? semcache::Outcome::incorrect_miss
                                   : semcache::Outcome::correct_miss;
        }
        records.push_back(rec);

        if (!hit || s.insert_policy == semcache::InsertPolicy::always) {
            if (s.capacity > 0) {
                std::size_t live = 0;
                for (const Stored& e : stored)
                    if (e.alive)
                        ++live;
                if (live >= s.capacity) {
                    std::size_t victim = stored.size();
                    for (std::size_t i = 0; i < stored.size(); ++i)
                        if (stored[i].alive &&
                            (victim == stored.size() ||
                             stored[i].last_access < stored[victim].last_access))
                            victim = i;
                    stored[victim].alive = false;
                }
            }
            ++clock;
            stored.push_back({q.group_id, emb, clock, clock, true});
        }
    }
    return records;
}

} // namespace oracle
