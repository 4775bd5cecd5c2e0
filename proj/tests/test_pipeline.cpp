#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "semcache/pipeline.hpp"

using namespace semcache;
using json = nlohmann::json;

namespace {

RetryPolicy fast_policy() {
    RetryPolicy policy;
    policy.sleep_fn = [](std::chrono::milliseconds) {};
    return policy;
}

std::shared_ptr<ScriptedLlmProvider> scripted() {
    return std::make_shared<ScriptedLlmProvider>();
}

LlmGateway gateway_for(std::shared_ptr<ScriptedLlmProvider> provider) {
    return LlmGateway(std::move(provider), fast_policy(), 4);
}

Document doc_of(const std::string& id, const std::string& text) {
    Document d;
    d.doc_id = id;
    d.text = text;
    return d;
}

QAPair verified_pair(const std::string& qa_id, const std::string& question,
                     const std::string& answer, const std::string& source) {
    QAPair p;
    p.qa_id = qa_id;
    p.question = question;
    p.answer = answer;
    p.source_doc_id = source;
    p.verified = true;
    p.created_by = CreatedBy::llm;
    return p;
}

// token-disjoint corpus used by the verification and relevance tests
const std::string kSolarText =
    "solar panels charge batteries on the observatory roof each afternoon";
const std::string kBreadText = "sourdough starter needs flour and water at every feeding";
const std::string kSolarQuestion = "when do solar panels charge batteries on the roof";
const std::string kSolarParaphrase = "how do solar panels charge batteries on the roof";
const std::string kBreadQuestion = "does sourdough starter need flour and water at every feeding";

// ten distinct tokens, one-token paraphrase pair
const std::string kAstroOriginal =
    "what sections must the final astronomy report include unit alpha";
const std::string kAstroSwap =
    "which sections must the final astronomy report include unit alpha";

} // namespace

TEST_CASE("pipeline config validation", "[pipeline]") {
    PipelineConfig config;
    CHECK_NOTHROW(config.validate());

    config.top_n_verification = 0;
    CHECK_THROWS_AS(config.validate(), ValidationError);
    config.top_n_verification = 3;

    config.variations_per_question = 0;
    CHECK_THROWS_AS(config.validate(), ValidationError);
    config.variations_per_question = 10;

    config.dedupe_similarity_ceiling = 1.5;
    CHECK_THROWS_AS(config.validate(), ValidationError);
    config.dedupe_similarity_ceiling = 0.98;

    config.worker_threads = 0;
    CHECK_THROWS_AS(config.validate(), ValidationError);
}

TEST_CASE("extract_answers collapses duplicate facts", "[pipeline]") {
    auto provider = scripted();
    provider->add_rule({"List the distinct factual statements"},
                       R"(["Fact A", "fact a ", "Fact B"])");
    auto llm = gateway_for(provider);

    PipelineConfig config;
    auto answers = extract_answers(doc_of("d1", "some document"), llm,
                                   default_prompt_templates(), config);
    REQUIRE(answers.size() == 2);
    CHECK(answers[0] == "Fact A");
    CHECK(answers[1] == "Fact B");
}

TEST_CASE("oversized documents are rejected by name", "[pipeline]") {
    auto llm = gateway_for(scripted());
    PipelineConfig config;
    config.max_document_chars = 10;

    try {
        extract_answers(doc_of("tiny-budget", "this text is longer than ten chars"), llm,
                        default_prompt_templates(), config);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("tiny-budget") != std::string::npos);
    }
}

TEST_CASE("a malformed reply triggers one repair re-prompt", "[pipeline]") {
    auto provider = scripted();
    // the junction fragment only exists once the repair suffix has been
    // appended after the template's own closing sentence
    provider->add_rule({"strings.\n\nReturn ONLY"}, R"(["Fact A", "Fact B"])");
    provider->add_rule({"List the distinct factual statements"}, "sorry, no list here");
    auto llm = gateway_for(provider);

    PipelineConfig config;
    auto answers = extract_answers(doc_of("d1", "some document"), llm,
                                   default_prompt_templates(), config);
    CHECK(answers == std::vector<std::string>{"Fact A", "Fact B"});
    CHECK(provider->calls() == 2);
    CHECK(llm.ledger().requests_sent == 2);
}

TEST_CASE("a second malformed reply propagates as a parse error", "[pipeline]") {
    auto provider = scripted();
    provider->add_rule({"List the distinct factual statements"}, "never a list");
    auto llm = gateway_for(provider);

    PipelineConfig config;
    CHECK_THROWS_AS(extract_answers(doc_of("d1", "some document"), llm,
                                    default_prompt_templates(), config),
                    ParseError);
    CHECK(provider->calls() == 2);
}

TEST_CASE("generate_questions builds pairs bound to the document", "[pipeline]") {
    auto provider = scripted();
    provider->add_rule({"Write exactly one question", "Fact: Fact A"}, R"(["Question A?"])");
    provider->add_rule({"Write exactly one question", "Fact: Fact B"}, R"(["Question B?"])");
    auto llm = gateway_for(provider);

    PipelineConfig config;
    RunManifest manifest;
    auto pairs = generate_questions({"Fact A", "Fact B"}, doc_of("d1", "some document"), llm,
                                    default_prompt_templates(), config, manifest);
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0].qa_id == "qa-d1-0");
    CHECK(pairs[0].question == "Question A?");
    CHECK(pairs[0].answer == "Fact A");
    CHECK(pairs[0].source_doc_id == "d1");
    CHECK_FALSE(pairs[0].verified);
    CHECK(pairs[0].created_by == CreatedBy::llm);
    CHECK(pairs[1].qa_id == "qa-d1-1");
    CHECK(manifest.skipped.empty());
}

TEST_CASE("generate_questions requires at least one answer", "[pipeline]") {
    auto llm = gateway_for(scripted());
    PipelineConfig config;
    RunManifest manifest;
    CHECK_THROWS_AS(generate_questions({}, doc_of("d1", "text"), llm,
                                       default_prompt_templates(), config, manifest),
                    ValidationError);
}

TEST_CASE("generate_questions skips duplicates failures and empty replies", "[pipeline]") {
    auto provider = scripted();
    provider->add_rule({"Fact: Fact A"}, R"(["Shared question?"])");
    provider->add_rule({"Fact: Fact B"}, R"(["shared question"])"); // dup after normalization
    provider->add_rule({"Fact: Fact D"}, "[]");                     // no question returned
    // Fact C has no rule at all -> provider error
    auto llm = gateway_for(provider);

    PipelineConfig config;
    RunManifest manifest;
    auto pairs = generate_questions({"Fact A", "Fact B", "Fact C", "Fact D"},
                                    doc_of("d1", "text"), llm, default_prompt_templates(),
                                    config, manifest);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].qa_id == "qa-d1-0");

    REQUIRE(manifest.skipped.size() == 3);
    CHECK(manifest.skipped[0].id == "qa-d1-1");
    CHECK(manifest.skipped[0].reason == "duplicate question within document");
    CHECK(manifest.skipped[1].id == "qa-d1-2");
    CHECK(manifest.skipped[2].id == "qa-d1-3");
    CHECK(manifest.skipped[2].reason == "model returned no question");
    for (const auto& s : manifest.skipped)
        CHECK(s.stage == "generate_questions");
}

TEST_CASE("verify_queries partitions by retrieval rank", "[pipeline]") {
    FeatureHashEmbedder embedder;
    std::vector<Document> corpus = {doc_of("doc-a", kSolarText), doc_of("doc-b", kBreadText)};
    CorpusIndex index(corpus, embedder);
    CHECK(index.size() == 2);

    QAPair good = verified_pair("qa1", kSolarQuestion, "afternoon", "doc-a");
    good.verified = false;
    QAPair offtopic = verified_pair("qa2", kBreadQuestion, "afternoon", "doc-a");
    offtopic.verified = false;

    auto [kept, dropped] = verify_queries({good, offtopic}, index, 1);
    REQUIRE(kept.size() == 1);
    REQUIRE(dropped.size() == 1);
    CHECK(kept[0].qa_id == "qa1");
    CHECK(kept[0].verified);
    CHECK(dropped[0].qa_id == "qa2");
    CHECK_FALSE(dropped[0].verified);

    // widening the retrieval window can only keep more
    auto [kept2, dropped2] = verify_queries({good, offtopic}, index, 2);
    CHECK(kept2.size() == 2);
    CHECK(dropped2.empty());
}

TEST_CASE("verify_queries validates its inputs", "[pipeline]") {
    FeatureHashEmbedder embedder;
    std::vector<Document> corpus = {doc_of("doc-a", kSolarText)};
    CorpusIndex index(corpus, embedder);

    QAPair p = verified_pair("qa1", kSolarQuestion, "a", "doc-a");
    CHECK_THROWS_AS(verify_queries({p}, index, 0), ValidationError);

    QAPair stray = verified_pair("qa2", kSolarQuestion, "a", "missing-doc");
    CHECK_THROWS_AS(verify_queries({stray}, index, 1), ValidationError);
}

TEST_CASE("filter_variations drops normalized duplicates", "[pipeline]") {
    FeatureHashEmbedder embedder;
    std::vector<Document> corpus = {
        doc_of("astro", "the final astronomy report must include sections for unit alpha")};
    CorpusIndex index(corpus, embedder);
    PipelineConfig config;

    QAPair original = verified_pair("qa1", kAstroOriginal, "the sections", "astro");
    auto survivors = filter_variations(
        original,
        {"What sections must the final astronomy report include unit alpha?", // dup of original
         kAstroSwap,
         "Which sections must the final astronomy report include unit alpha?"}, // dup of accepted
        index, config);
    REQUIRE(survivors.size() == 1);
    CHECK(survivors[0] == kAstroSwap);
}

TEST_CASE("filter_variations drops near duplicates by embedding", "[pipeline]") {
    FeatureHashEmbedder embedder;
    std::vector<Document> corpus = {
        doc_of("astro", "the final astronomy report must include sections for unit alpha")};
    CorpusIndex index(corpus, embedder);
    PipelineConfig config;

    QAPair original = verified_pair("qa1", kAstroOriginal, "the sections", "astro");

    // same token multiset as the original: different string, cosine exactly 1
    auto vs_original = filter_variations(
        original, {"sections what must the final astronomy report include unit alpha"}, index,
        config);
    CHECK(vs_original.empty());

    // one-token swap survives, then its reordering collides with it
    auto chained = filter_variations(
        original,
        {kAstroSwap, "sections which must the final astronomy report include unit alpha"},
        index, config);
    REQUIRE(chained.size() == 1);
    CHECK(chained[0] == kAstroSwap);

    // a ceiling of 1.0 admits the near duplicate
    config.dedupe_similarity_ceiling = 1.0;
    auto loose = filter_variations(original, {kAstroSwap}, index, config);
    CHECK(loose.size() == 1);
}

TEST_CASE("filter_variations re-checks retrieval relevance", "[pipeline]") {
    FeatureHashEmbedder embedder;
    std::vector<Document> corpus = {doc_of("doc-a", kSolarText), doc_of("doc-b", kBreadText)};
    CorpusIndex index(corpus, embedder);
    PipelineConfig config;
    config.top_n_verification = 1;

    QAPair original = verified_pair("qa1", kSolarQuestion, "afternoon", "doc-a");
    auto survivors =
        filter_variations(original, {kSolarParaphrase, kBreadQuestion}, index, config);
    REQUIRE(survivors.size() == 1);
    CHECK(survivors[0] == kSolarParaphrase);

    // with the window widened the off-topic candidate passes the re-check
    config.top_n_verification = 2;
    auto widened = filter_variations(original, {kSolarParaphrase, kBreadQuestion}, index, config);
    CHECK(widened.size() == 2);
}

TEST_CASE("filter_variations drops unembeddable candidates silently", "[pipeline]") {
    FeatureHashEmbedder embedder;
    std::vector<Document> corpus = {
        doc_of("astro", "the final astronomy report must include sections for unit alpha")};
    CorpusIndex index(corpus, embedder);
    PipelineConfig config;

    QAPair original = verified_pair("qa1", kAstroOriginal, "the sections", "astro");
    auto survivors = filter_variations(original, {"???", kAstroSwap}, index, config);
    REQUIRE(survivors.size() == 1);
    CHECK(survivors[0] == kAstroSwap);
}

TEST_CASE("filter_variations keeps candidate order", "[pipeline]") {
    FeatureHashEmbedder embedder;
    std::vector<Document> corpus = {
        doc_of("astro", "the final astronomy report must include sections for unit alpha")};
    CorpusIndex index(corpus, embedder);
    PipelineConfig config;

    QAPair original = verified_pair("qa1", kAstroOriginal, "the sections", "astro");
    std::string beta = "which sections must the final astronomy report include unit beta";
    auto survivors = filter_variations(original, {beta, kAstroSwap}, index, config);
    REQUIRE(survivors.size() == 2);
    CHECK(survivors[0] == beta);
    CHECK(survivors[1] == kAstroSwap);
}

TEST_CASE("generate_variations requires a verified pair", "[pipeline]") {
    FeatureHashEmbedder embedder;
    std::vector<Document> corpus = {doc_of("doc-a", kSolarText)};
    CorpusIndex index(corpus, embedder);
    auto llm = gateway_for(scripted());
    PipelineConfig config;
    RunManifest manifest;

    QAPair unverified = verified_pair("qa1", kSolarQuestion, "afternoon", "doc-a");
    unverified.verified = false;
    CHECK_THROWS_AS(generate_variations(unverified, llm, default_prompt_templates(), index,
                                        config, manifest),
                    ValidationError);
}

TEST_CASE("generate_variations produces a filtered group", "[pipeline]") {
    FeatureHashEmbedder embedder;
    std::vector<Document> corpus = {doc_of("doc-a", kSolarText)};
    CorpusIndex index(corpus, embedder);

    auto provider = scripted();
    provider->add_rule({"Generate variations ONLY", "Question: " + kSolarQuestion},
                       json::array({kSolarParaphrase, kSolarQuestion, "???"}).dump());
    auto llm = gateway_for(provider);

    PipelineConfig config;
    RunManifest manifest;
    QAPair pair = verified_pair("qa1", kSolarQuestion, "afternoon", "doc-a");
    VariationGroup group =
        generate_variations(pair, llm, default_prompt_templates(), index, config, manifest);

    CHECK(group.group_id == "g-qa1");
    CHECK(group.original.qa_id == "qa1");
    CHECK(group.answer == "afternoon");
    REQUIRE(group.variations.size() == 1);
    CHECK(group.variations[0] == kSolarParaphrase);
    CHECK(manifest.per_stage_counts.at("variations_returned") == 3);
    CHECK(manifest.skipped.empty());
    CHECK_NOTHROW(group.validate());
}

TEST_CASE("an llm failure degrades to a single-member group", "[pipeline]") {
    FeatureHashEmbedder embedder;
    std::vector<Document> corpus = {doc_of("doc-a", kSolarText)};
    CorpusIndex index(corpus, embedder);
    PipelineConfig config;
    QAPair pair = verified_pair("qa1", kSolarQuestion, "afternoon", "doc-a");

    SECTION("no rule matches the request") {
        auto llm = gateway_for(scripted());
        RunManifest manifest;
        VariationGroup group =
            generate_variations(pair, llm, default_prompt_templates(), index, config, manifest);
        CHECK(group.group_id == "g-qa1");
        CHECK(group.variations.empty());
        CHECK(group.size() == 1);
        REQUIRE(manifest.skipped.size() == 1);
        CHECK(manifest.skipped[0].stage == "generate_variations");
        CHECK(manifest.skipped[0].id == "qa1");
    }

    SECTION("the reply never parses") {
        auto provider = scripted();
        provider->add_rule({"Generate variations ONLY"}, "not a list, even after repair");
        auto llm = gateway_for(provider);
        RunManifest manifest;
        VariationGroup group =
            generate_variations(pair, llm, default_prompt_templates(), index, config, manifest);
        CHECK(group.variations.empty());
        CHECK(provider->calls() == 2);
        REQUIRE(manifest.skipped.size() == 1);
        CHECK(manifest.skipped[0].stage == "generate_variations");
    }
}

TEST_CASE("run_pipeline over the shipped fixtures", "[pipeline]") {
    auto corpus = read_corpus(SEMCACHE_FIXTURE_DIR "/corpus.jsonl");
    REQUIRE(corpus.size() == 5);

    auto run_once = [&corpus](std::size_t workers) {
        std::ifstream in(SEMCACHE_FIXTURE_DIR "/script.json");
        REQUIRE(in);
        json script = json::parse(in);
        auto provider =
            std::make_shared<ScriptedLlmProvider>(ScriptedLlmProvider::from_json(script));
        LlmGateway llm(provider, fast_policy(), 4);
        FeatureHashEmbedder embedder;
        PipelineConfig config;
        config.seed = 7;
        config.worker_threads = workers;
        return run_pipeline(corpus, llm, embedder, config, default_prompt_templates());
    };

    PipelineResult result = run_once(4);
    CHECK(result.qa_pairs.size() == 10);
    CHECK(result.dropped_pairs.empty());
    REQUIRE(result.groups.size() == 10);
    std::size_t variations = 0;
    for (const auto& g : result.groups) {
        CHECK(g.original.verified);
        CHECK_NOTHROW(g.validate());
        variations += g.variations.size();
    }
    CHECK(variations == 20);

    const auto& counts = result.manifest.per_stage_counts;
    CHECK(counts.at("documents") == 5);
    CHECK(counts.at("answers_extracted") == 10);
    CHECK(counts.at("questions_generated") == 10);
    CHECK(counts.at("verification_kept") == 10);
    CHECK(counts.at("verification_dropped") == 0);
    CHECK(counts.at("variations_requested") == 100);
    CHECK(counts.at("variations_returned") == 20);
    CHECK(counts.at("variations_survived") == 20);
    CHECK(counts.at("groups") == 10);
    CHECK(result.manifest.skipped.empty());

    // generated pairs partition into kept groups and dropped pairs
    CHECK(result.qa_pairs.size() == result.groups.size() + result.dropped_pairs.size());

    // scheduling must not affect output
    auto serialize = [](const PipelineResult& r) {
        json out = json::array();
        for (const auto& g : r.groups)
            out.push_back(to_json(g));
        return out.dump();
    };
    std::string first = serialize(result);
    CHECK(serialize(run_once(4)) == first);
    CHECK(serialize(run_once(1)) == first);
}
