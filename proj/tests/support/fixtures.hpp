#pragma once

// Shared helpers for building synthetic datasets out of controlled token
// sets, so similarity structure is engineered rather than accidental.

#include <set>
#include <string>
#include <vector>

#include "semcache/dataset.hpp"
#include "semcache/rng.hpp"

namespace fixtures {

// Vocabulary of collision-friendly tokens: tok0..tok<n-1>.
inline std::vector<std::string> vocabulary(std::size_t n) {
    std::vector<std::string> v;
    v.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        v.push_back("tok" + std::to_string(i));
    return v;
}

inline std::string join(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i)
            out += ' ';
        out += tokens[i];
    }
    return out;
}

template <typename T>
void shuffle_with(std::vector<T>& items, semcache::SplitMix64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        using std::swap;
        swap(items[i - 1], items[j]);
    }
}

// Random sentence of `len` distinct tokens drawn from the vocabulary.
inline std::vector<std::string> random_tokens(semcache::SplitMix64& rng,
                                              const std::vector<std::string>& vocab,
                                              std::size_t len) {
    std::set<std::size_t> picked;
    while (picked.size() < len && picked.size() < vocab.size())
        picked.insert(static_cast<std::size_t>(rng.next_below(vocab.size())));
    std::vector<std::string> out;
    for (std::size_t i : picked)
        out.push_back(vocab[i]);
    // shuffle so word order varies while the token set stays controlled
    shuffle_with(out, rng);
    return out;
}

// Random dataset: groups whose variations perturb the original's token set
// by a few substitutions, over a small vocabulary so cross-group token
// collisions (hard negatives) occur naturally.
inline std::vector<semcache::VariationGroup>
random_dataset(semcache::SplitMix64& rng, std::size_t n_groups, std::size_t max_variations,
               std::size_t vocab_size = 40) {
    std::vector<std::string> vocab = vocabulary(vocab_size);
    std::set<std::string> used;
    std::vector<semcache::VariationGroup> groups;
    for (std::size_t g = 0; g < n_groups; ++g) {
        std::size_t len = 4 + static_cast<std::size_t>(rng.next_below(5));
        std::vector<std::string> base;
        std::string base_text;
        for (int attempt = 0; attempt < 32; ++attempt) {
            base = random_tokens(rng, vocab, len);
            base_text = join(base);
            if (used.insert(semcache::normalize_question(base_text)).second)
                break;
            base_text.clear();
        }
        if (base_text.empty())
            continue;

        semcache::VariationGroup group;
        group.group_id = "g" + std::to_string(g);
        group.answer = "answer " + std::to_string(g);
        group.original.qa_id = "qa" + std::to_string(g);
        group.original.question = base_text;
        group.original.answer = group.answer;
        group.original.source_doc_id = "doc" + std::to_string(g);
        group.original.verified = true;
        group.original.created_by = semcache::CreatedBy::fixture;

        std::size_t n_vars = static_cast<std::size_t>(rng.next_below(max_variations + 1));
        for (std::size_t v = 0; v < n_vars; ++v) {
            std::vector<std::string> var = base;
            std::size_t swaps = 1 + static_cast<std::size_t>(rng.next_below(3));
            for (std::size_t s = 0; s < swaps; ++s)
                var[static_cast<std::size_t>(rng.next_below(var.size()))] =
                    vocab[static_cast<std::size_t>(rng.next_below(vocab.size()))];
            shuffle_with(var, rng);
            std::string text = join(var);
            if (used.insert(semcache::normalize_question(text)).second)
                group.variations.push_back(text);
        }
        groups.push_back(std::move(group));
    }
    return groups;
}

} // namespace fixtures
