#pragma once

#include <cstdlib>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "semcache/embedding.hpp"
#include "semcache/errors.hpp"
#include "semcache/llm.hpp"
#include "semcache/scorer.hpp"

namespace semcache {

namespace detail {

// Transient: anything worth a retry (transport faults, 5xx, 429).
// Remaining 4xx are the caller's bug and fail fast.
inline bool status_is_transient(int status) {
    return status == 429 || (status >= 500 && status < 600);
}

inline std::optional<std::string> api_key_from_env() {
    const char* key = std::getenv("SEMCACHE_API_KEY");
    if (key && *key)
        return std::string(key);
    return std::nullopt;
}

class HttpJsonClient {
  public:
    HttpJsonClient(std::string base_url, int timeout_ms) : base_url_(std::move(base_url)) {
        if (base_url_.empty())
            throw ValidationError("http client: endpoint_url is required");
        while (base_url_.size() > 1 && base_url_.back() == '/')
            base_url_.pop_back();
        client_ = std::make_unique<httplib::Client>(base_url_);
        client_->set_connection_timeout(0, timeout_ms * 1000);
        client_->set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
        client_->set_write_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
        if (auto key = api_key_from_env())
            client_->set_bearer_token_auth(*key);
    }

    // One POST, no retries here; retry policy lives with the caller.
    nlohmann::json post(const std::string& path, const nlohmann::json& body) {
        httplib::Result res = client_->Post(path, body.dump(), "application/json");
        if (!res)
            throw ProviderError("transport failure calling " + base_url_ + path + ": " +
                                    httplib::to_string(res.error()),
                                /*transient=*/true, std::nullopt, 1);
        if (res->status < 200 || res->status >= 300)
            throw ProviderError("HTTP " + std::to_string(res->status) + " from " + base_url_ +
                                    path + ": " + res->body.substr(0, 200),
                                status_is_transient(res->status), res->status, 1);
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw ProviderError("unparseable JSON from " + base_url_ + path + ": " + e.what(),
                                /*transient=*/false, res->status, 1);
        }
    }

    const std::string& base_url() const { return base_url_; }

  private:
    std::string base_url_;
    std::unique_ptr<httplib::Client> client_;
};

} // namespace detail

// POST {endpoint_url}/v1/embeddings with {"model", "input": [...]}; the
// response's data rows are re-ordered by their index field. Vectors are
// used as returned, no re-normalization.
class RemoteEmbedder final : public EmbeddingProvider {
  public:
    explicit RemoteEmbedder(const EmbeddingProviderConfig& config)
        : config_(config), client_(config.endpoint_url.value_or(""), config.timeout_ms),
          policy_{config.max_retries, std::chrono::milliseconds(config.retry_base_delay_ms)} {
        if (config_.kind != EmbeddingKind::remote)
            throw ValidationError("remote embedder: config kind must be remote");
        config_.validate();
    }

    std::size_t dim() const override { return config_.dim; }

    std::string fingerprint() const override {
        return "remote:" + *config_.model_name + ":dim=" + std::to_string(config_.dim);
    }

    std::vector<Embedding> embed(const std::vector<std::string>& texts) const override {
        require_embeddable(texts);
        nlohmann::json body = {{"model", *config_.model_name}, {"input", texts}};
        nlohmann::json response = post_with_retry("/v1/embeddings", body);

        std::vector<Embedding> out(texts.size());
        std::vector<bool> seen(texts.size(), false);
        const nlohmann::json* data;
        try {
            data = &response.at("data");
        } catch (const nlohmann::json::exception&) {
            throw ContractViolation("embedding response missing data array");
        }
        if (!data->is_array() || data->size() != texts.size())
            throw ContractViolation("embedding response has " + std::to_string(data->size()) +
                                    " rows for " + std::to_string(texts.size()) + " inputs");
        for (const nlohmann::json& row : *data) {
            std::size_t index;
            Embedding e;
            try {
                index = row.at("index").get<std::size_t>();
                e.values = row.at("embedding").get<std::vector<double>>();
            } catch (const nlohmann::json::exception& ex) {
                throw ContractViolation(std::string("malformed embedding row: ") + ex.what());
            }
            if (index >= texts.size() || seen[index])
                throw ContractViolation("embedding row index " + std::to_string(index) +
                                        " out of range or repeated");
            if (e.dim() != config_.dim)
                throw ContractViolation("embedding dim " + std::to_string(e.dim()) +
                                        " does not match configured dim " +
                                        std::to_string(config_.dim));
            seen[index] = true;
            out[index] = std::move(e);
        }
        return out;
    }

  private:
    nlohmann::json post_with_retry(const std::string& path, const nlohmann::json& body) const {
        policy_.validate();
        SplitMix64 rng(policy_.jitter_seed);
        for (int attempt = 0;; ++attempt) {
            try {
                return client_.post(path, body);
            } catch (const ProviderError& e) {
                if (!e.transient() || attempt >= policy_.max_retries)
                    throw ProviderError(e.what(), e.transient(), e.http_status(), attempt + 1);
                policy_.sleep_fn(policy_.delay_for_attempt(attempt, rng));
            }
        }
    }

    EmbeddingProviderConfig config_;
    mutable detail::HttpJsonClient client_;
    RetryPolicy policy_;
};

// POST {endpoint_url}/v1/chat/completions; assistant text read from
// choices[0].message.content. Retries are NOT applied here; this provider
// reports one attempt and the gateway's policy drives repeats.
class HttpLlmProvider final : public LlmProvider {
  public:
    HttpLlmProvider(std::string endpoint_url, int timeout_ms = 10000)
        : client_(std::move(endpoint_url), timeout_ms) {}

    std::string name() const override { return "http:" + client_.base_url(); }

    std::string complete(const ChatRequest& request) override {
        request.validate();
        nlohmann::json body = {{"model", request.model_name},
                               {"temperature", request.temperature},
                               {"max_tokens", request.max_tokens},
                               {"messages",
                                {{{"role", "system"}, {"content", request.system_prompt}},
                                 {{"role", "user"}, {"content", request.user_prompt}}}}};
        nlohmann::json response = client_.post("/v1/chat/completions", body);
        try {
            return response.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ProviderError(std::string("chat response missing choices[0].message.content: ") +
                                    e.what(),
                                /*transient=*/false, std::nullopt, 1);
        }
    }

  private:
    detail::HttpJsonClient client_;
};

// POST {endpoint_url}/score with {"query", "candidates": [...]} and read
// back positional {"scores": [...]}.
class RemotePairScorer final : public SimilarityScorer {
  public:
    RemotePairScorer(std::string endpoint_url, int timeout_ms = 10000, RetryPolicy policy = {})
        : client_(std::move(endpoint_url), timeout_ms), policy_(std::move(policy)) {
        policy_.validate();
    }

    std::string name() const override { return "remote_pair"; }

    double score(const std::string& query_text, const Embedding& query_embedding,
                 const std::string& candidate_text,
                 const Embedding& candidate_embedding) const override {
        std::vector<ScoreCandidate> one = {{&candidate_text, &candidate_embedding}};
        return score_batch(query_text, query_embedding, one).front();
    }

    std::vector<double> score_batch(const std::string& query_text, const Embedding&,
                                    const std::vector<ScoreCandidate>& candidates) const override {
        if (candidates.empty())
            return {};
        nlohmann::json texts = nlohmann::json::array();
        for (const ScoreCandidate& c : candidates)
            texts.push_back(*c.text);
        nlohmann::json body = {{"query", query_text}, {"candidates", texts}};

        SplitMix64 rng(policy_.jitter_seed);
        nlohmann::json response;
        for (int attempt = 0;; ++attempt) {
            try {
                response = client_.post("/score", body);
                break;
            } catch (const ProviderError& e) {
                if (!e.transient() || attempt >= policy_.max_retries)
                    throw ProviderError(e.what(), e.transient(), e.http_status(), attempt + 1);
                policy_.sleep_fn(policy_.delay_for_attempt(attempt, rng));
            }
        }

        std::vector<double> scores;
        try {
            scores = response.at("scores").get<std::vector<double>>();
        } catch (const nlohmann::json::exception& e) {
            throw ContractViolation(std::string("score response missing scores array: ") +
                                    e.what());
        }
        if (scores.size() != candidates.size())
            throw ContractViolation("score response has " + std::to_string(scores.size()) +
                                    " scores for " + std::to_string(candidates.size()) +
                                    " candidates");
        for (double s : scores)
            if (s < 0.0 || s > 1.0)
                throw ContractViolation("remote score outside [0, 1]");
        return scores;
    }

  private:
    mutable detail::HttpJsonClient client_;
    RetryPolicy policy_;
};

} // namespace semcache
