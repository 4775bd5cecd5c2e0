// Command-line front end: generate, verify, vary, evaluate, calibrate, report.
// Option precedence is defaults < config file < environment < flags.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "semcache/commands.hpp"

namespace {

using namespace semcache;
using namespace semcache::cli;

void add_llm_options(CLI::App& cmd, LlmOptions& opt) {
    cmd.add_option("--provider", opt.provider, "LLM provider: scripted or http")
        ->capture_default_str();
    cmd.add_option("--script", opt.script_path, "response table for the scripted provider");
    cmd.add_option("--llm-url", opt.endpoint_url, "base URL of the chat completion service")
        ->envname("SEMCACHE_LLM_URL");
    cmd.add_option("--llm-timeout-ms", opt.timeout_ms, "request timeout")->capture_default_str();
    cmd.add_option("--max-retries", opt.max_retries, "retries after the first attempt")
        ->capture_default_str();
    cmd.add_option("--retry-base-delay-ms", opt.retry_base_delay_ms,
                   "backoff base delay in milliseconds")
        ->capture_default_str();
    cmd.add_option("--max-in-flight", opt.max_in_flight, "concurrent LLM requests")
        ->capture_default_str();
}

void add_embedder_options(CLI::App& cmd, EmbedderOptions& opt) {
    cmd.add_option("--embedder", opt.kind, "embedding provider: local or remote")
        ->capture_default_str();
    cmd.add_option("--dim", opt.dim, "embedding dimension")->capture_default_str();
    cmd.add_option("--embed-url", opt.endpoint_url, "base URL of the embedding service")
        ->envname("SEMCACHE_EMBED_URL");
    cmd.add_option("--embed-model", opt.model_name, "embedding model name");
    cmd.add_option("--embed-timeout-ms", opt.timeout_ms, "request timeout")
        ->capture_default_str();
    cmd.add_option("--embed-max-retries", opt.max_retries, "retries after the first attempt")
        ->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"semcache: build Q/A paraphrase datasets and measure semantic cache behavior"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from a TOML-style config file");

    GenerateOptions gen;
    CLI::App* generate = app.add_subcommand("generate", "synthesize Q/A pairs from a corpus");
    generate->add_option("corpus", gen.corpus_path, "corpus.jsonl input")->required();
    generate->add_option("--out", gen.out_path, "qa.jsonl output")->capture_default_str();
    generate->add_option("--manifest", gen.manifest_path, "run manifest output")
        ->capture_default_str();
    generate->add_option("--model", gen.pipeline.model_name, "chat model name")
        ->capture_default_str();
    generate->add_option("--max-doc-chars", gen.pipeline.max_document_chars,
                         "largest accepted document")
        ->capture_default_str();
    generate->add_option("--extract-temperature", gen.pipeline.extraction_temperature,
                         "sampling temperature for extraction prompts")
        ->capture_default_str();
    generate->add_option("--max-tokens", gen.pipeline.max_tokens, "completion token budget")
        ->capture_default_str();
    generate->add_option("--seed", gen.pipeline.seed, "run seed, echoed into the manifest")
        ->capture_default_str();
    generate->add_option("--domain-terms", gen.pipeline.domain_terms,
                         "terms the question prompts should prefer");
    add_llm_options(*generate, gen.llm);

    VerifyOptions ver;
    CLI::App* verify = app.add_subcommand("verify", "keep questions that retrieve their source");
    verify->add_option("qa", ver.qa_path, "qa.jsonl input")->required();
    verify->add_option("corpus", ver.corpus_path, "corpus.jsonl input")->required();
    verify->add_option("--out", ver.out_path, "verified qa.jsonl output")->capture_default_str();
    verify->add_option("--dropped", ver.dropped_path, "rejected pairs output")
        ->capture_default_str();
    verify->add_option("--manifest", ver.manifest_path, "run manifest output")
        ->capture_default_str();
    verify->add_option("--top-n", ver.top_n, "documents retrieved per question")
        ->capture_default_str();
    verify->add_option("--seed", ver.seed, "run seed, echoed into the manifest")
        ->capture_default_str();
    add_embedder_options(*verify, ver.embedder);

    VaryOptions var;
    CLI::App* vary = app.add_subcommand("vary", "generate paraphrase variations per question");
    vary->add_option("qa", var.qa_path, "verified qa.jsonl input")->required();
    vary->add_option("corpus", var.corpus_path, "corpus.jsonl input")->required();
    vary->add_option("--out", var.out_path, "groups.jsonl output")->capture_default_str();
    vary->add_option("--manifest", var.manifest_path, "run manifest output")
        ->capture_default_str();
    vary->add_option("--per-question", var.pipeline.variations_per_question,
                     "variations requested per question")
        ->capture_default_str();
    vary->add_option("--guidelines", var.guidelines_path, "variation guidelines template file");
    vary->add_option("--dedupe-ceiling", var.pipeline.dedupe_similarity_ceiling,
                     "near-duplicate similarity ceiling")
        ->capture_default_str();
    vary->add_option("--top-n", var.pipeline.top_n_verification,
                     "documents retrieved for the relevance re-check")
        ->capture_default_str();
    vary->add_option("--model", var.pipeline.model_name, "chat model name")
        ->capture_default_str();
    vary->add_option("--variation-temperature", var.pipeline.variation_temperature,
                     "sampling temperature for variation prompts")
        ->capture_default_str();
    vary->add_option("--max-tokens", var.pipeline.max_tokens, "completion token budget")
        ->capture_default_str();
    vary->add_option("--seed", var.pipeline.seed, "run seed, echoed into the manifest")
        ->capture_default_str();
    add_llm_options(*vary, var.llm);
    add_embedder_options(*vary, var.embedder);

    EvaluateOptions ev;
    CLI::App* evaluate = app.add_subcommand("evaluate", "replay a dataset through the cache");
    evaluate->add_option("groups", ev.groups_path, "groups.jsonl input")->required();
    evaluate->add_option("--report", ev.report_path, "report.json output")->capture_default_str();
    evaluate->add_option("--records", ev.records_path, "eval.jsonl output")
        ->capture_default_str();
    evaluate->add_option("--scorer", ev.scorer, "similarity scorer: cosine or remote_pair")
        ->capture_default_str();
    evaluate->add_option("--score-url", ev.score_url, "base URL of the pair-scoring service")
        ->envname("SEMCACHE_SCORE_URL");
    evaluate->add_option("--threshold", ev.threshold, "hit threshold on [0, 1]")
        ->capture_default_str();
    evaluate->add_option("--top-k", ev.top_k, "candidates considered per lookup")
        ->capture_default_str();
    evaluate->add_option("--capacity", ev.capacity, "cache capacity, 0 for unbounded")
        ->capture_default_str();
    evaluate->add_option("--order", ev.order, "replay order: as_given or seeded_shuffle")
        ->capture_default_str();
    evaluate->add_option("--insert-policy", ev.insert_policy, "on_miss or always")
        ->capture_default_str();
    evaluate->add_option("--seed", ev.seed, "shuffle seed")->capture_default_str();
    add_embedder_options(*evaluate, ev.embedder);

    CalibrateOptions cal;
    CLI::App* calibrate = app.add_subcommand("calibrate", "sweep thresholds over one plan");
    calibrate->add_option("groups", cal.groups_path, "groups.jsonl input")->required();
    calibrate->add_option("--out", cal.out_path, "sweep.csv output")->capture_default_str();
    calibrate->add_option("--thresholds", cal.thresholds,
                          "lo:hi:step grid or comma-separated list")
        ->capture_default_str();
    calibrate->add_option("--scorer", cal.scorer, "similarity scorer: cosine or remote_pair")
        ->capture_default_str();
    calibrate->add_option("--score-url", cal.score_url, "base URL of the pair-scoring service")
        ->envname("SEMCACHE_SCORE_URL");
    calibrate->add_option("--top-k", cal.top_k, "candidates considered per lookup")
        ->capture_default_str();
    calibrate->add_option("--capacity", cal.capacity, "cache capacity, 0 for unbounded")
        ->capture_default_str();
    calibrate->add_option("--order", cal.order, "replay order: as_given or seeded_shuffle")
        ->capture_default_str();
    calibrate->add_option("--insert-policy", cal.insert_policy, "on_miss or always")
        ->capture_default_str();
    calibrate->add_option("--seed", cal.seed, "shuffle seed")->capture_default_str();
    add_embedder_options(*calibrate, cal.embedder);

    ReportOptions rep;
    CLI::App* report = app.add_subcommand("report", "render a saved report.json");
    report->add_option("report", rep.report_path, "report.json input")->required();
    report->add_option("--format", rep.format, "json, csv, or markdown")->capture_default_str();
    report->add_option("--out", rep.out_path, "write here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    return run_command(
        [&]() -> int {
            if (generate->parsed())
                return cmd_generate(gen, std::cout, std::cerr);
            if (verify->parsed())
                return cmd_verify(ver, std::cout, std::cerr);
            if (vary->parsed())
                return cmd_vary(var, std::cout, std::cerr);
            if (evaluate->parsed())
                return cmd_evaluate(ev, std::cout, std::cerr);
            if (calibrate->parsed())
                return cmd_calibrate(cal, std::cout, std::cerr);
            if (report->parsed())
                return cmd_report(rep, std::cout, std::cerr);
            std::cerr << "error: no subcommand\n";
            return kExitUsage;
        },
        std::cerr);
}
