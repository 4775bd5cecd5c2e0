#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "semcache/embedding.hpp"
#include "semcache/errors.hpp"

namespace semcache {

struct ScoreCandidate {
    const std::string* text;
    const Embedding* embedding;
};

// Second-stage relevance scorer. Scores are on [0, 1] and compared against
// the cache threshold; candidates are presented as text plus embedding only,
// so a scorer can never peek at dataset ground truth.
class SimilarityScorer {
  public:
    virtual ~SimilarityScorer() = default;

    virtual std::string name() const = 0;

    virtual double score(const std::string& query_text, const Embedding& query_embedding,
                         const std::string& candidate_text,
                         const Embedding& candidate_embedding) const = 0;

    virtual std::vector<double> score_batch(const std::string& query_text,
                                            const Embedding& query_embedding,
                                            const std::vector<ScoreCandidate>& candidates) const {
        std::vector<double> out;
        out.reserve(candidates.size());
        for (const ScoreCandidate& c : candidates)
            out.push_back(score(query_text, query_embedding, *c.text, *c.embedding));
        return out;
    }
};

// Cosine rescaled to [0, 1]; 0.5 means orthogonal.
class CosineScorer final : public SimilarityScorer {
  public:
    std::string name() const override { return "rescaled_cosine"; }

    double score(const std::string&, const Embedding& query_embedding, const std::string&,
                 const Embedding& candidate_embedding) const override {
        return rescale_cosine(cosine_similarity(query_embedding, candidate_embedding));
    }
};

// Fixed lookup table keyed on (query text, candidate text) for tests that
// need exact scores independent of any embedding geometry.
class ScriptedScorer final : public SimilarityScorer {
  public:
    ScriptedScorer() = default;
    explicit ScriptedScorer(double fallback) : fallback_(fallback) {
        if (fallback < 0.0 || fallback > 1.0)
            throw ValidationError("scripted scorer: fallback outside [0, 1]");
    }

    void set(const std::string& query_text, const std::string& candidate_text, double value) {
        if (value < 0.0 || value > 1.0)
            throw ValidationError("scripted scorer: score outside [0, 1]");
        table_[{query_text, candidate_text}] = value;
    }

    std::string name() const override { return "scripted"; }

    double score(const std::string& query_text, const Embedding&,
                 const std::string& candidate_text, const Embedding&) const override {
        auto it = table_.find({query_text, candidate_text});
        if (it != table_.end())
            return it->second;
        if (fallback_)
            return *fallback_;
        throw ValidationError("scripted scorer: no score for query \"" + query_text +
                              "\" candidate \"" + candidate_text + "\"");
    }

  private:
    std::map<std::pair<std::string, std::string>, double> table_;
    std::optional<double> fallback_;
};

} // namespace semcache
