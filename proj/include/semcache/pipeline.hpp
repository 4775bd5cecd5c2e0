#pragma once

#include <atomic>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "semcache/dataset.hpp"
#include "semcache/embedding.hpp"
#include "semcache/errors.hpp"
#include "semcache/llm.hpp"
#include "semcache/prompts.hpp"
#include "semcache/text.hpp"
#include "semcache/vector_store.hpp"

namespace semcache {

struct PipelineConfig {
    std::size_t top_n_verification = 3;
    std::size_t variations_per_question = 10;
    double dedupe_similarity_ceiling = 0.98; // rescaled-cosine scale
    std::optional<std::vector<std::string>> domain_terms;
    std::uint64_t seed = 0;

    std::string model_name = "default";
    double extraction_temperature = 0.0;
    double variation_temperature = 0.8;
    int max_tokens = 1024;
    std::size_t max_document_chars = 24000;
    std::size_t worker_threads = 4;

    void validate() const {
        if (top_n_verification == 0)
            throw ValidationError("pipeline config: top_n_verification must be positive");
        if (variations_per_question == 0)
            throw ValidationError("pipeline config: variations_per_question must be positive");
        if (dedupe_similarity_ceiling < 0.0 || dedupe_similarity_ceiling > 1.0)
            throw ValidationError("pipeline config: dedupe_similarity_ceiling must be in [0, 1]");
        if (max_document_chars == 0)
            throw ValidationError("pipeline config: max_document_chars must be positive");
        if (worker_threads == 0)
            throw ValidationError("pipeline config: worker_threads must be positive");
    }

    json to_json() const {
        json j = {{"top_n_verification", top_n_verification},
                  {"variations_per_question", variations_per_question},
                  {"dedupe_similarity_ceiling", dedupe_similarity_ceiling},
                  {"seed", seed},
                  {"model_name", model_name},
                  {"extraction_temperature", extraction_temperature},
                  {"variation_temperature", variation_temperature},
                  {"max_tokens", max_tokens},
                  {"max_document_chars", max_document_chars},
                  {"worker_threads", worker_threads}};
        if (domain_terms)
            j["domain_terms"] = *domain_terms;
        return j;
    }
};

struct SkipEntry {
    std::string stage;
    std::string id;
    std::string reason;

    bool operator==(const SkipEntry&) const = default;
};

struct RunManifest {
    std::uint64_t seed = 0;
    json config;
    std::map<std::string, std::uint64_t> per_stage_counts;
    std::vector<SkipEntry> skipped;

    void count(const std::string& key, std::uint64_t delta = 1) {
        per_stage_counts[key] += delta;
    }

    void skip(std::string stage, std::string id, std::string reason) {
        skipped.push_back({std::move(stage), std::move(id), std::move(reason)});
    }

    json to_json() const {
        json skips = json::array();
        for (const SkipEntry& s : skipped)
            skips.push_back({{"stage", s.stage}, {"id", s.id}, {"reason", s.reason}});
        return {{"seed", seed},
                {"config", config},
                {"per_stage_counts", per_stage_counts},
                {"skipped", skips}};
    }

    void write(const std::string& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot write " + path);
        out << to_json().dump(2) << "\n";
    }
};

// ── retrieval index over the corpus ─────────────────────────────

// Documents embedded once, queried many times during verification and
// variation filtering.
class CorpusIndex {
  public:
    CorpusIndex(const std::vector<Document>& corpus, const EmbeddingProvider& embedder)
        : embedder_(embedder), store_(embedder.dim()) {
        if (corpus.empty())
            throw ValidationError("corpus index: corpus is empty");
        std::vector<std::string> texts;
        texts.reserve(corpus.size());
        for (const Document& d : corpus)
            texts.push_back(d.text);
        std::vector<Embedding> embeddings = embedder.embed(texts);
        for (std::size_t i = 0; i < corpus.size(); ++i)
            store_.insert(corpus[i].doc_id, embeddings[i]);
    }

    std::size_t size() const { return store_.size(); }
    bool has_doc(const std::string& doc_id) const { return store_.contains(doc_id); }

    std::vector<std::string> top_doc_ids(const Embedding& query, std::size_t n) const {
        std::vector<std::string> ids;
        for (const Neighbor& nb : store_.top_k(query, n))
            ids.push_back(nb.entry_id);
        return ids;
    }

    // The stage-2 check: does retrieving top n documents for this question
    // surface its source document?
    bool retrieves_source(const Embedding& question, const std::string& source_doc_id,
                          std::size_t n) const {
        for (const Neighbor& nb : store_.top_k(question, n))
            if (nb.entry_id == source_doc_id)
                return true;
        return false;
    }

    const EmbeddingProvider& embedder() const { return embedder_; }

  private:
    const EmbeddingProvider& embedder_;
    VectorStore store_;
};

// ── stage operations ────────────────────────────────────────────

namespace detail {

// One completion plus one repair attempt on malformed output; the second
// parse failure propagates for the caller to record as a skip.
inline std::vector<std::string> request_string_list(LlmGateway& llm, ChatRequest req) {
    std::string raw = llm.complete(req);
    try {
        return parse_json_list(raw);
    } catch (const ParseError&) {
        req.user_prompt += kRepairSuffix;
        return parse_json_list(llm.complete(req));
    }
}

inline std::string join_terms(const Document& doc, const PipelineConfig& config) {
    const std::vector<std::string>* terms = nullptr;
    if (doc.domain_terms && !doc.domain_terms->empty())
        terms = &*doc.domain_terms;
    else if (config.domain_terms && !config.domain_terms->empty())
        terms = &*config.domain_terms;
    if (!terms)
        return "none";
    std::string out;
    for (std::size_t i = 0; i < terms->size(); ++i) {
        if (i)
            out += ", ";
        out += (*terms)[i];
    }
    return out;
}

} // namespace detail

inline void require_document_fits(const Document& doc, const PipelineConfig& config) {
    if (doc.text.size() > config.max_document_chars)
        throw ValidationError("document " + doc.doc_id + " has " +
                              std::to_string(doc.text.size()) +
                              " chars, over the max_document_chars budget of " +
                              std::to_string(config.max_document_chars));
}

// Stage 1a: pull candidate answers (facts) out of one document.
// Duplicates collapse under normalized-string identity, first wins.
inline std::vector<std::string> extract_answers(const Document& doc, LlmGateway& llm,
                                                const PromptTemplates& templates,
                                                const PipelineConfig& config) {
    require_document_fits(doc, config);
    ChatRequest req;
    req.model_name = config.model_name;
    req.temperature = config.extraction_temperature;
    req.max_tokens = config.max_tokens;
    req.system_prompt = kExtractSystemPrompt;
    req.user_prompt = render_template(templates.extract_facts, {{"document_text", doc.text}});
    std::vector<std::string> raw = detail::request_string_list(llm, req);

    std::vector<std::string> answers;
    std::set<std::string> seen;
    for (const std::string& a : raw)
        if (seen.insert(normalize_question(a)).second)
            answers.push_back(a);
    return answers;
}

// Stage 1b: one question per answer, bound to the source document.
// Questions that collide after normalization within the document are
// dropped and recorded.
inline std::vector<QAPair> generate_questions(const std::vector<std::string>& answers,
                                              const Document& doc, LlmGateway& llm,
                                              const PromptTemplates& templates,
                                              const PipelineConfig& config,
                                              RunManifest& manifest) {
    if (answers.empty())
        throw ValidationError("generate_questions: answers list is empty for document " +
                              doc.doc_id);
    std::vector<QAPair> pairs;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < answers.size(); ++i) {
        std::string qa_id = "qa-" + doc.doc_id + "-" + std::to_string(i);
        ChatRequest req;
        req.model_name = config.model_name;
        req.temperature = config.extraction_temperature;
        req.max_tokens = config.max_tokens;
        req.system_prompt = kExtractSystemPrompt;
        req.user_prompt = render_template(templates.generate_question,
                                          {{"answer", answers[i]},
                                           {"document_text", doc.text},
                                           {"domain_terms", detail::join_terms(doc, config)}});
        std::vector<std::string> out;
        try {
            out = detail::request_string_list(llm, req);
        } catch (const ProviderError& e) {
            manifest.skip("generate_questions", qa_id, e.what());
            continue;
        } catch (const ParseError& e) {
            manifest.skip("generate_questions", qa_id, e.what());
            continue;
        }
        if (out.empty()) {
            manifest.skip("generate_questions", qa_id, "model returned no question");
            continue;
        }
        if (!seen.insert(normalize_question(out.front())).second) {
            manifest.skip("generate_questions", qa_id, "duplicate question within document");
            continue;
        }
        QAPair p;
        p.qa_id = qa_id;
        p.question = out.front();
        p.answer = answers[i];
        p.source_doc_id = doc.doc_id;
        p.verified = false;
        p.created_by = CreatedBy::llm;
        pairs.push_back(std::move(p));
    }
    return pairs;
}

// Stage 2: keep a pair only if its question retrieves the source document
// among the top n. Partition result: kept + dropped = input.
inline std::pair<std::vector<QAPair>, std::vector<QAPair>>
verify_queries(const std::vector<QAPair>& pairs, const CorpusIndex& index, std::size_t n) {
    if (n == 0)
        throw ValidationError("verify_queries: n must be positive");
    for (const QAPair& p : pairs)
        if (!index.has_doc(p.source_doc_id))
            throw ValidationError("verify_queries: source_doc_id \"" + p.source_doc_id +
                                  "\" of " + p.qa_id + " is not in the corpus");
    std::vector<QAPair> kept;
    std::vector<QAPair> dropped;
    for (const QAPair& p : pairs) {
        Embedding q = index.embedder().embed_one(p.question);
        if (index.retrieves_source(q, p.source_doc_id, n)) {
            QAPair k = p;
            k.verified = true;
            kept.push_back(std::move(k));
        } else {
            dropped.push_back(p);
        }
    }
    return {std::move(kept), std::move(dropped)};
}

// Stage 3b: three ordered rules over candidate variations. Survivors keep
// input order. Unembeddable candidates (no tokens) are dropped rather
// than raised; an empty result is legal.
inline std::vector<std::string> filter_variations(const QAPair& original,
                                                  const std::vector<std::string>& candidates,
                                                  const CorpusIndex& index,
                                                  const PipelineConfig& config) {
    const EmbeddingProvider& embedder = index.embedder();
    Embedding original_embedding = embedder.embed_one(original.question);

    std::vector<std::string> accepted;
    std::vector<Embedding> accepted_embeddings;
    std::set<std::string> seen;
    seen.insert(normalize_question(original.question));

    for (const std::string& candidate : candidates) {
        std::string norm = normalize_question(candidate);
        if (norm.empty() || !seen.insert(norm).second)
            continue; // rule 1: normalized duplicate

        Embedding e;
        try {
            e = embedder.embed_one(candidate);
        } catch (const ValidationError&) {
            seen.erase(norm);
            continue;
        }

        bool near_dup =
            rescale_cosine(cosine_similarity(e, original_embedding)) >=
            config.dedupe_similarity_ceiling;
        for (std::size_t i = 0; !near_dup && i < accepted_embeddings.size(); ++i)
            near_dup = rescale_cosine(cosine_similarity(e, accepted_embeddings[i])) >=
                       config.dedupe_similarity_ceiling;
        if (near_dup) { // rule 2: near-duplicate
            seen.erase(norm);
            continue;
        }

        if (!index.retrieves_source(e, original.source_doc_id, config.top_n_verification)) {
            seen.erase(norm); // rule 3: fails relevance re-check
            continue;
        }

        accepted.push_back(candidate);
        accepted_embeddings.push_back(std::move(e));
    }
    return accepted;
}

// Stage 3a: ask for paraphrases of one verified pair, then filter. An LLM
// failure degrades to a size-1 group so one bad sample cannot sink a run.
inline VariationGroup generate_variations(const QAPair& pair, LlmGateway& llm,
                                          const PromptTemplates& templates,
                                          const CorpusIndex& index, const PipelineConfig& config,
                                          RunManifest& manifest) {
    if (!pair.verified)
        throw ValidationError("generate_variations: pair " + pair.qa_id + " is not verified");

    VariationGroup group;
    group.group_id = "g-" + pair.qa_id;
    group.original = pair;
    group.answer = pair.answer;

    std::string guidelines = render_template(
        templates.guidelines, {{"count", std::to_string(config.variations_per_question)}});
    ChatRequest req;
    req.model_name = config.model_name;
    req.temperature = config.variation_temperature;
    req.max_tokens = config.max_tokens;
    req.system_prompt = kVariationSystemPrompt;
    req.user_prompt = render_template(templates.generate_variations,
                                      {{"question", pair.question},
                                       {"answer", pair.answer},
                                       {"guidelines", guidelines}});
    std::vector<std::string> candidates;
    try {
        candidates = detail::request_string_list(llm, req);
    } catch (const ProviderError& e) {
        manifest.skip("generate_variations", pair.qa_id, e.what());
        return group;
    } catch (const ParseError& e) {
        manifest.skip("generate_variations", pair.qa_id, e.what());
        return group;
    }
    manifest.count("variations_returned", candidates.size());
    group.variations = filter_variations(pair, candidates, index, config);
    return group;
}

// ── whole-corpus run ────────────────────────────────────────────

struct PipelineResult {
    std::vector<QAPair> qa_pairs;         // all generated, pre-verification
    std::vector<QAPair> dropped_pairs;    // failed verification
    std::vector<VariationGroup> groups;
    RunManifest manifest;
};

// Composes the stages over the whole corpus. Documents are processed by a
// small worker pool; results and skip entries merge in corpus order so a
// scripted run is byte-reproducible regardless of scheduling.
inline PipelineResult run_pipeline(const std::vector<Document>& corpus, LlmGateway& llm,
                                   const EmbeddingProvider& embedder,
                                   const PipelineConfig& config,
                                   const PromptTemplates& templates) {
    config.validate();
    templates.validate();
    if (corpus.empty())
        throw ValidationError("run_pipeline: corpus is empty");
    for (const Document& doc : corpus)
        require_document_fits(doc, config);

    PipelineResult result;
    result.manifest.seed = config.seed;
    result.manifest.config = config.to_json();
    result.manifest.count("documents", corpus.size());

    CorpusIndex index(corpus, embedder);

    struct DocOutput {
        std::vector<QAPair> pairs;
        RunManifest local;
        std::size_t answers = 0;
    };
    std::vector<DocOutput> outputs(corpus.size());
    std::atomic<std::size_t> next_doc{0};
    std::size_t n_workers = std::min(config.worker_threads, corpus.size());

    auto work = [&] {
        for (;;) {
            std::size_t i = next_doc.fetch_add(1);
            if (i >= corpus.size())
                return;
            const Document& doc = corpus[i];
            DocOutput& out = outputs[i];
            std::vector<std::string> answers;
            try {
                answers = extract_answers(doc, llm, templates, config);
            } catch (const ProviderError& e) {
                out.local.skip("extract_answers", doc.doc_id, e.what());
                continue;
            } catch (const ParseError& e) {
                out.local.skip("extract_answers", doc.doc_id, e.what());
                continue;
            }
            out.answers = answers.size();
            if (answers.empty()) {
                out.local.skip("extract_answers", doc.doc_id, "no facts extracted");
                continue;
            }
            out.pairs = generate_questions(answers, doc, llm, templates, config, out.local);
        }
    };
    std::vector<std::thread> workers;
    for (std::size_t i = 0; i + 1 < n_workers; ++i)
        workers.emplace_back(work);
    work();
    for (std::thread& t : workers)
        t.join();

    for (DocOutput& out : outputs) {
        result.manifest.count("answers_extracted", out.answers);
        result.manifest.count("questions_generated", out.pairs.size());
        for (SkipEntry& s : out.local.skipped)
            result.manifest.skipped.push_back(std::move(s));
        for (QAPair& p : out.pairs)
            result.qa_pairs.push_back(std::move(p));
    }

    auto [kept, dropped] = verify_queries(result.qa_pairs, index, config.top_n_verification);
    result.manifest.count("verification_kept", kept.size());
    result.manifest.count("verification_dropped", dropped.size());
    for (const QAPair& p : dropped)
        result.manifest.skip("verify_queries", p.qa_id, "source document not in top-" +
                                                            std::to_string(config.top_n_verification));
    result.dropped_pairs = std::move(dropped);

    std::vector<VariationGroup> groups(kept.size());
    std::vector<RunManifest> locals(kept.size());
    std::atomic<std::size_t> next_pair{0};
    auto vary_work = [&] {
        for (;;) {
            std::size_t i = next_pair.fetch_add(1);
            if (i >= kept.size())
                return;
            groups[i] = generate_variations(kept[i], llm, templates, index, config, locals[i]);
        }
    };
    std::size_t v_workers = std::min(config.worker_threads, kept.size());
    workers.clear();
    for (std::size_t i = 0; i + 1 < v_workers; ++i)
        workers.emplace_back(vary_work);
    vary_work();
    for (std::thread& t : workers)
        t.join();

    result.manifest.count("variations_requested", kept.size() * config.variations_per_question);
    std::uint64_t survived = 0;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        for (const auto& [key, delta] : locals[i].per_stage_counts)
            result.manifest.count(key, delta);
        for (SkipEntry& s : locals[i].skipped)
            result.manifest.skipped.push_back(std::move(s));
        survived += groups[i].variations.size();
    }
    result.manifest.count("variations_survived", survived);
    result.manifest.count("groups", groups.size());
    result.groups = std::move(groups);
    return result;
}

} // namespace semcache
