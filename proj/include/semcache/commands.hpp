#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "semcache/cache.hpp"
#include "semcache/dataset.hpp"
#include "semcache/embedding.hpp"
#include "semcache/errors.hpp"
#include "semcache/evaluation.hpp"
#include "semcache/http_providers.hpp"
#include "semcache/llm.hpp"
#include "semcache/pipeline.hpp"
#include "semcache/prompts.hpp"

namespace semcache {

// Exit codes: 0 success, 2 usage or input validation, 1 operational failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitOperational = 1;
inline constexpr int kExitUsage = 2;

namespace cli {

struct LlmOptions {
    std::string provider = "scripted"; // scripted | http
    std::string script_path;
    std::string endpoint_url; // env SEMCACHE_LLM_URL
    int timeout_ms = 10000;
    int max_retries = 3;
    int retry_base_delay_ms = 500;
    std::size_t max_in_flight = 4;
    std::uint64_t jitter_seed = 0;
};

struct EmbedderOptions {
    std::string kind = "local"; // local | remote
    std::size_t dim = 256;
    std::string endpoint_url;
    std::string model_name;
    int timeout_ms = 10000;
    int max_retries = 3;
};

inline void require_readable(const std::string& path, const std::string& what) {
    if (path.empty())
        throw ValidationError(what + " path is required");
    if (!std::filesystem::exists(path))
        throw ValidationError(what + " not found: " + path);
}

inline std::shared_ptr<LlmProvider> make_llm_provider(const LlmOptions& opt) {
    if (opt.provider == "scripted") {
        require_readable(opt.script_path, "script file");
        json j;
        try {
            j = json::parse(read_text_file(opt.script_path));
        } catch (const json::exception& e) {
            throw ParseError("script file " + opt.script_path + ": " + e.what(), "");
        }
        return std::make_shared<ScriptedLlmProvider>(ScriptedLlmProvider::from_json(j));
    }
    if (opt.provider == "http") {
        if (opt.endpoint_url.empty())
            throw ValidationError("http provider needs --llm-url or SEMCACHE_LLM_URL");
        return std::make_shared<HttpLlmProvider>(opt.endpoint_url, opt.timeout_ms);
    }
    throw ValidationError("unknown provider \"" + opt.provider + "\" (scripted, http)");
}

inline std::unique_ptr<LlmGateway> make_gateway(const LlmOptions& opt) {
    RetryPolicy policy;
    policy.max_retries = opt.max_retries;
    policy.base_delay = std::chrono::milliseconds(opt.retry_base_delay_ms);
    policy.jitter_seed = opt.jitter_seed;
    return std::make_unique<LlmGateway>(make_llm_provider(opt), std::move(policy),
                                        opt.max_in_flight);
}

inline std::shared_ptr<EmbeddingProvider> make_embedder(const EmbedderOptions& opt) {
    if (opt.kind == "local") {
        if (opt.dim == 0)
            throw ValidationError("embedder dim must be positive");
        return std::make_shared<FeatureHashEmbedder>(opt.dim);
    }
    if (opt.kind == "remote") {
        EmbeddingProviderConfig config;
        config.kind = EmbeddingKind::remote;
        config.endpoint_url = opt.endpoint_url.empty()
                                  ? std::nullopt
                                  : std::optional<std::string>(opt.endpoint_url);
        config.model_name =
            opt.model_name.empty() ? std::nullopt : std::optional<std::string>(opt.model_name);
        config.dim = opt.dim;
        config.timeout_ms = opt.timeout_ms;
        config.max_retries = opt.max_retries;
        config.validate();
        return std::make_shared<RemoteEmbedder>(config);
    }
    throw ValidationError("unknown embedder \"" + opt.kind + "\" (local, remote)");
}

inline PromptTemplates load_templates(const std::string& guidelines_path) {
    PromptTemplates t = default_prompt_templates();
    if (!guidelines_path.empty()) {
        require_readable(guidelines_path, "guidelines file");
        t.guidelines = read_text_file(guidelines_path);
    }
    t.validate();
    return t;
}

// ── generate: corpus -> unverified qa pairs ─────────────────────

struct GenerateOptions {
    std::string corpus_path;
    std::string out_path = "qa.jsonl";
    std::string manifest_path = "run_manifest.json";
    std::string guidelines_path;
    LlmOptions llm;
    PipelineConfig pipeline;
};

inline int cmd_generate(const GenerateOptions& opt, std::ostream& out, std::ostream& err) {
    opt.pipeline.validate();
    require_readable(opt.corpus_path, "corpus file");
    std::vector<Document> corpus = read_corpus(opt.corpus_path);
    if (corpus.empty())
        throw ValidationError("corpus file " + opt.corpus_path + " has no documents");
    for (const Document& doc : corpus)
        require_document_fits(doc, opt.pipeline);

    PromptTemplates templates = load_templates(opt.guidelines_path);
    std::unique_ptr<LlmGateway> llm = make_gateway(opt.llm);

    RunManifest manifest;
    manifest.seed = opt.pipeline.seed;
    manifest.config = opt.pipeline.to_json();
    manifest.count("documents", corpus.size());

    std::vector<QAPair> pairs;
    for (const Document& doc : corpus) {
        std::vector<std::string> answers;
        try {
            answers = extract_answers(doc, *llm, templates, opt.pipeline);
        } catch (const ProviderError& e) {
            manifest.skip("extract_answers", doc.doc_id, e.what());
            err << "warning: document " << doc.doc_id << " skipped: " << e.what() << "\n";
            continue;
        } catch (const ParseError& e) {
            manifest.skip("extract_answers", doc.doc_id, e.what());
            err << "warning: document " << doc.doc_id << " skipped: " << e.what() << "\n";
            continue;
        }
        manifest.count("answers_extracted", answers.size());
        if (answers.empty()) {
            manifest.skip("extract_answers", doc.doc_id, "no facts extracted");
            err << "warning: no facts extracted from " << doc.doc_id << "\n";
            continue;
        }
        std::vector<QAPair> doc_pairs =
            generate_questions(answers, doc, *llm, templates, opt.pipeline, manifest);
        manifest.count("questions_generated", doc_pairs.size());
        for (QAPair& p : doc_pairs)
            pairs.push_back(std::move(p));
    }

    write_qa_pairs(pairs, opt.out_path);
    manifest.write(opt.manifest_path);
    out << "generated " << pairs.size() << " question-answer pairs from " << corpus.size()
        << " documents -> " << opt.out_path << "\n";
    return kExitOk;
}

// ── verify: retrieval-ground the generated questions ───────────

struct VerifyOptions {
    std::string qa_path;
    std::string corpus_path;
    std::string out_path = "verified.jsonl";
    std::string dropped_path = "dropped.jsonl";
    std::string manifest_path = "run_manifest.json";
    std::size_t top_n = 3;
    EmbedderOptions embedder;
    std::uint64_t seed = 0;
};

inline int cmd_verify(const VerifyOptions& opt, std::ostream& out, std::ostream& err) {
    if (opt.top_n == 0)
        throw ValidationError("--top-n must be positive");
    require_readable(opt.qa_path, "qa file");
    require_readable(opt.corpus_path, "corpus file");
    std::vector<QAPair> pairs = read_qa_pairs(opt.qa_path);
    std::vector<Document> corpus = read_corpus(opt.corpus_path);
    if (corpus.empty())
        throw ValidationError("corpus file " + opt.corpus_path + " has no documents");

    std::shared_ptr<EmbeddingProvider> embedder = make_embedder(opt.embedder);
    CorpusIndex index(corpus, *embedder);
    auto [kept, dropped] = verify_queries(pairs, index, opt.top_n);

    write_qa_pairs(kept, opt.out_path);
    write_qa_pairs(dropped, opt.dropped_path);

    RunManifest manifest;
    manifest.seed = opt.seed;
    manifest.config = {{"top_n_verification", opt.top_n},
                       {"embedder_fingerprint", embedder->fingerprint()}};
    manifest.count("input_pairs", pairs.size());
    manifest.count("verification_kept", kept.size());
    manifest.count("verification_dropped", dropped.size());
    for (const QAPair& p : dropped)
        manifest.skip("verify_queries", p.qa_id,
                      "source document not in top-" + std::to_string(opt.top_n));
    manifest.write(opt.manifest_path);

    if (!dropped.empty())
        err << "dropped " << dropped.size() << " unverifiable questions -> " << opt.dropped_path
            << "\n";
    out << "kept " << kept.size() << " of " << pairs.size() << " questions -> " << opt.out_path
        << "\n";
    return kExitOk;
}

// ── vary: paraphrase the verified questions ────────────────────

struct VaryOptions {
    std::string qa_path;
    std::string corpus_path;
    std::string out_path = "groups.jsonl";
    std::string manifest_path = "run_manifest.json";
    std::string guidelines_path;
    LlmOptions llm;
    EmbedderOptions embedder;
    PipelineConfig pipeline;
};

inline int cmd_vary(const VaryOptions& opt, std::ostream& out, std::ostream& err) {
    opt.pipeline.validate();
    require_readable(opt.qa_path, "qa file");
    require_readable(opt.corpus_path, "corpus file");
    std::vector<QAPair> pairs = read_qa_pairs(opt.qa_path);
    std::vector<Document> corpus = read_corpus(opt.corpus_path);
    if (corpus.empty())
        throw ValidationError("corpus file " + opt.corpus_path + " has no documents");

    PromptTemplates templates = load_templates(opt.guidelines_path);
    std::unique_ptr<LlmGateway> llm = make_gateway(opt.llm);
    std::shared_ptr<EmbeddingProvider> embedder = make_embedder(opt.embedder);
    CorpusIndex index(corpus, *embedder);

    RunManifest manifest;
    manifest.seed = opt.pipeline.seed;
    manifest.config = opt.pipeline.to_json();
    manifest.config["embedder_fingerprint"] = embedder->fingerprint();

    std::vector<VariationGroup> groups;
    std::size_t skipped_unverified = 0;
    for (const QAPair& p : pairs) {
        if (!p.verified) {
            ++skipped_unverified;
            manifest.skip("generate_variations", p.qa_id, "pair is not verified");
            err << "warning: skipping unverified pair " << p.qa_id << "\n";
            continue;
        }
        groups.push_back(generate_variations(p, *llm, templates, index, opt.pipeline, manifest));
    }
    manifest.count("input_pairs", pairs.size());
    manifest.count("skipped_unverified", skipped_unverified);
    manifest.count("groups", groups.size());
    manifest.count("variations_requested",
                   (pairs.size() - skipped_unverified) * opt.pipeline.variations_per_question);
    std::uint64_t survived = 0;
    for (const VariationGroup& g : groups)
        survived += g.variations.size();
    manifest.count("variations_survived", survived);

    write_dataset(groups, opt.out_path);
    manifest.write(opt.manifest_path);
    out << "wrote " << groups.size() << " groups with " << survived << " variations -> "
        << opt.out_path << "\n";
    return kExitOk;
}

// ── evaluate: replay a dataset through the cache ────────────────

struct EvaluateOptions {
    std::string groups_path;
    std::string report_path = "report.json";
    std::string records_path = "eval.jsonl";
    std::string scorer = "cosine"; // cosine | remote_pair
    std::string score_url;
    double threshold = 0.9;
    std::size_t top_k = 5;
    std::size_t capacity = 0;
    std::string order = "seeded_shuffle";
    std::string insert_policy = "on_miss";
    std::uint64_t seed = 0;
    EmbedderOptions embedder;
};

inline std::shared_ptr<SimilarityScorer> make_scorer(const EvaluateOptions& opt) {
    if (opt.scorer == "cosine")
        return std::make_shared<CosineScorer>();
    if (opt.scorer == "remote_pair") {
        if (opt.score_url.empty())
            throw ValidationError("remote_pair scorer needs --score-url");
        return std::make_shared<RemotePairScorer>(opt.score_url);
    }
    throw ValidationError("unknown scorer \"" + opt.scorer + "\" (cosine, remote_pair)");
}

inline int cmd_evaluate(const EvaluateOptions& opt, std::ostream& out, std::ostream& err) {
    if (opt.threshold < 0.0 || opt.threshold > 1.0)
        throw ValidationError("--threshold must be in [0, 1]");
    require_readable(opt.groups_path, "groups file");
    std::vector<VariationGroup> groups = read_dataset(opt.groups_path);
    for (const std::string& w : dataset_warnings(groups))
        err << "warning: " << w << "\n";

    OrderPolicy order = order_policy_from_string(opt.order);
    InsertPolicy insert = insert_policy_from_string(opt.insert_policy);
    ReplayPlan plan = build_plan(groups, order, opt.seed);

    std::shared_ptr<EmbeddingProvider> embedder = make_embedder(opt.embedder);
    std::shared_ptr<SimilarityScorer> scorer = make_scorer(opt);
    CacheConfig config{opt.threshold, opt.top_k, opt.capacity};
    SemanticCache cache(config, embedder, scorer);

    ConfusionReport report = replay(plan, cache, insert);

    write_text_file(report_to_json(report).dump(2) + "\n", opt.report_path);
    write_eval_records(report.records, opt.records_path);
    out << summarize(report, ReportFormat::markdown);
    return kExitOk;
}

// ── calibrate: sweep thresholds, chart the tradeoff ─────────────

struct CalibrateOptions {
    std::string groups_path;
    std::string out_path = "sweep.csv";
    std::string thresholds = "0.5:1.0:0.05";
    std::string scorer = "cosine";
    std::string score_url;
    std::size_t top_k = 5;
    std::size_t capacity = 0;
    std::string order = "seeded_shuffle";
    std::string insert_policy = "on_miss";
    std::uint64_t seed = 0;
    EmbedderOptions embedder;
};

inline int cmd_calibrate(const CalibrateOptions& opt, std::ostream& out, std::ostream& err) {
    std::vector<double> grid = parse_threshold_grid(opt.thresholds);
    require_readable(opt.groups_path, "groups file");
    std::vector<VariationGroup> groups = read_dataset(opt.groups_path);
    for (const std::string& w : dataset_warnings(groups))
        err << "warning: " << w << "\n";

    OrderPolicy order = order_policy_from_string(opt.order);
    InsertPolicy insert = insert_policy_from_string(opt.insert_policy);
    ReplayPlan plan = build_plan(groups, order, opt.seed);

    std::shared_ptr<EmbeddingProvider> embedder = make_embedder(opt.embedder);
    EvaluateOptions scorer_opt;
    scorer_opt.scorer = opt.scorer;
    scorer_opt.score_url = opt.score_url;
    std::shared_ptr<SimilarityScorer> scorer = make_scorer(scorer_opt);

    CalibrationCurve curve = sweep(
        plan, grid,
        [&](double t) {
            return SemanticCache(CacheConfig{t, opt.top_k, opt.capacity}, embedder, scorer);
        },
        insert);

    write_text_file(curve_to_csv(curve), opt.out_path);
    if (auto best = curve.best_threshold())
        out << "best threshold by f1: " << detail::fmt_double(*best) << "\n";
    else
        out << "best threshold by f1: n/a (no point had a defined f1)\n";
    out << "wrote " << curve.points.size() << " sweep points -> " << opt.out_path << "\n";
    return kExitOk;
}

// ── report: render a saved report ───────────────────────────────

struct ReportOptions {
    std::string report_path;
    std::string format = "markdown"; // json | csv | markdown
    std::string out_path;            // empty = stdout
};

inline int cmd_report(const ReportOptions& opt, std::ostream& out, std::ostream&) {
    ReportFormat format = report_format_from_string(opt.format);
    require_readable(opt.report_path, "report file");
    json j;
    try {
        j = json::parse(read_text_file(opt.report_path));
    } catch (const json::exception& e) {
        throw ParseError("report file " + opt.report_path + ": " + e.what(), "");
    }
    ConfusionReport report = report_from_json(j);
    std::string text = summarize(report, format);
    if (opt.out_path.empty())
        out << text;
    else
        write_text_file(text, opt.out_path);
    return kExitOk;
}

// Shared error-to-exit-code mapping for all commands.
template <typename F>
int run_command(F&& body, std::ostream& err) {
    try {
        return body();
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ProviderError& e) {
        err << "error: " << e.what() << " (after " << e.attempts() << " attempts)\n";
        return kExitOperational;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitOperational;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitOperational;
    }
}

} // namespace cli
} // namespace semcache
