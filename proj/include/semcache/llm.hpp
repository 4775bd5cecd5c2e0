#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "semcache/errors.hpp"
#include "semcache/rng.hpp"
#include "semcache/text.hpp"

namespace semcache {

struct ChatRequest {
    std::string model_name;
    double temperature = 0.0;
    int max_tokens = 1024;
    std::string system_prompt;
    std::string user_prompt;

    void validate() const {
        if (system_prompt.empty() || user_prompt.empty())
            throw ValidationError("chat request: prompts must be non-empty");
        if (temperature < 0.0)
            throw ValidationError("chat request: temperature must be >= 0");
        if (max_tokens <= 0)
            throw ValidationError("chat request: max_tokens must be positive");
    }
};

class LlmProvider {
  public:
    virtual ~LlmProvider() = default;
    virtual std::string name() const = 0;
    // Blocking single completion. Throws ProviderError on failure.
    virtual std::string complete(const ChatRequest& request) = 0;
};

// Substring-keyed canned responses for tests and offline fixture runs.
// Rules are checked in order against the user prompt; a rule matches when
// every `when` fragment appears.
class ScriptedLlmProvider final : public LlmProvider {
  public:
    struct Rule {
        std::vector<std::string> when;
        std::string respond;
    };

    ScriptedLlmProvider() = default;
    explicit ScriptedLlmProvider(std::vector<Rule> rules) : rules_(std::move(rules)) {}
    ScriptedLlmProvider(ScriptedLlmProvider&& other) noexcept
        : rules_(std::move(other.rules_)), calls_(other.calls_.load()) {}

    static ScriptedLlmProvider from_json(const nlohmann::json& j) {
        std::vector<Rule> rules;
        for (const nlohmann::json& r : j.at("rules")) {
            Rule rule;
            rule.when = r.at("when").get<std::vector<std::string>>();
            rule.respond = r.at("respond").get<std::string>();
            if (rule.when.empty())
                throw ValidationError("scripted llm: rule with empty `when` list");
            rules.push_back(std::move(rule));
        }
        return ScriptedLlmProvider(std::move(rules));
    }

    void add_rule(std::vector<std::string> when, std::string respond) {
        rules_.push_back({std::move(when), std::move(respond)});
    }

    std::string name() const override { return "scripted"; }

    std::string complete(const ChatRequest& request) override {
        ++calls_;
        for (const Rule& rule : rules_) {
            bool all = true;
            for (const std::string& fragment : rule.when)
                if (request.user_prompt.find(fragment) == std::string::npos) {
                    all = false;
                    break;
                }
            if (all)
                return rule.respond;
        }
        throw ProviderError("scripted llm: no rule matches prompt starting \"" +
                                request.user_prompt.substr(0, 60) + "\"",
                            /*transient=*/false, std::nullopt, 1);
    }

    std::uint64_t calls() const { return calls_; }

  private:
    std::vector<Rule> rules_;
    std::atomic<std::uint64_t> calls_{0};
};

// ── retry and accounting ────────────────────────────────────────

// failures counts failed attempts, not failed operations, so
// requests_sent == successes + failures holds at every quiescent point.
struct UsageLedger {
    std::atomic<std::uint64_t> requests_sent{0};
    std::atomic<std::uint64_t> successes{0};
    std::atomic<std::uint64_t> failures{0};
    std::atomic<std::uint64_t> retries{0};
    std::atomic<std::uint64_t> prompt_chars{0};
    std::atomic<std::uint64_t> completion_chars{0};

    nlohmann::json to_json() const {
        return {{"requests_sent", requests_sent.load()}, {"successes", successes.load()},
                {"failures", failures.load()},           {"retries", retries.load()},
                {"prompt_chars", prompt_chars.load()},   {"completion_chars", completion_chars.load()}};
    }
};

// Exponential backoff with full jitter: attempt n (0-based) that fails with
// a transient error sleeps uniform [0, base * factor^n) before the retry.
// Non-transient errors are rethrown immediately. max_retries counts retries
// after the first attempt, so at most max_retries + 1 requests go out.
struct RetryPolicy {
    int max_retries = 3;
    std::chrono::milliseconds base_delay{500};
    double backoff_factor = 2.0;
    std::uint64_t jitter_seed = 0;
    std::function<void(std::chrono::milliseconds)> sleep_fn =
        [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };

    void validate() const {
        if (max_retries < 0)
            throw ValidationError("retry policy: max_retries must be >= 0");
        if (base_delay.count() <= 0)
            throw ValidationError("retry policy: base_delay must be positive");
        if (backoff_factor < 1.0)
            throw ValidationError("retry policy: backoff_factor must be >= 1");
    }

    std::chrono::milliseconds delay_for_attempt(int attempt, SplitMix64& rng) const {
        double cap = static_cast<double>(base_delay.count());
        for (int i = 0; i < attempt; ++i)
            cap *= backoff_factor;
        auto bound = static_cast<std::uint64_t>(cap);
        if (bound == 0)
            bound = 1;
        return std::chrono::milliseconds(rng.next_below(bound));
    }
};

inline std::string complete_with_retry(LlmProvider& provider, const ChatRequest& request,
                                       const RetryPolicy& policy, UsageLedger& ledger,
                                       std::uint64_t jitter_stream = 0) {
    policy.validate();
    request.validate();
    SplitMix64 rng(policy.jitter_seed ^ (jitter_stream * 0x9E3779B97F4A7C15ULL));
    for (int attempt = 0;; ++attempt) {
        try {
            ++ledger.requests_sent;
            ledger.prompt_chars += request.system_prompt.size() + request.user_prompt.size();
            std::string text = provider.complete(request);
            ++ledger.successes;
            ledger.completion_chars += text.size();
            return text;
        } catch (const ProviderError& e) {
            ++ledger.failures;
            if (!e.transient() || attempt >= policy.max_retries)
                throw ProviderError(e.what(), e.transient(), e.http_status(), attempt + 1);
            ++ledger.retries;
            policy.sleep_fn(policy.delay_for_attempt(attempt, rng));
        }
    }
}

// Shared front door for LLM calls: caps concurrent in-flight requests,
// applies the retry policy, and keeps usage counters.
class LlmGateway {
  public:
    LlmGateway(std::shared_ptr<LlmProvider> provider, RetryPolicy policy,
               std::size_t max_in_flight)
        : provider_(std::move(provider)), policy_(std::move(policy)), slots_(max_in_flight) {
        if (!provider_)
            throw ValidationError("llm gateway: provider is required");
        if (max_in_flight == 0)
            throw ValidationError("llm gateway: max_in_flight must be positive");
        policy_.validate();
    }

    std::string complete(const ChatRequest& request) {
        SlotGuard guard(*this);
        std::uint64_t stream = next_stream_++;
        return complete_with_retry(*provider_, request, policy_, ledger_, stream);
    }

    const UsageLedger& ledger() const { return ledger_; }
    const LlmProvider& provider() const { return *provider_; }
    std::size_t peak_in_flight() const { return peak_; }

  private:
    struct SlotGuard {
        explicit SlotGuard(LlmGateway& g) : gateway(g) {
            std::unique_lock lock(g.mutex_);
            g.available_cv_.wait(lock, [&] { return g.in_flight_ < g.slots_; });
            ++g.in_flight_;
            if (g.in_flight_ > g.peak_)
                g.peak_ = g.in_flight_;
        }
        ~SlotGuard() {
            {
                std::lock_guard lock(gateway.mutex_);
                --gateway.in_flight_;
            }
            gateway.available_cv_.notify_one();
        }
        LlmGateway& gateway;
    };

    std::shared_ptr<LlmProvider> provider_;
    RetryPolicy policy_;
    std::size_t slots_;
    std::mutex mutex_;
    std::condition_variable available_cv_;
    std::size_t in_flight_ = 0;
    std::size_t peak_ = 0;
    std::atomic<std::uint64_t> next_stream_{0};
    UsageLedger ledger_;
};

// ── response parsing ────────────────────────────────────────────

// Extracts the first JSON array of strings from free-form model output,
// tolerating prose before or after it. Elements are trimmed and empty
// strings dropped. Throws ParseError (carrying the raw text) if no
// such array exists.
inline std::vector<std::string> parse_json_list(const std::string& text) {
    for (std::size_t start = 0; start < text.size(); ++start) {
        if (text[start] != '[')
            continue;
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        std::optional<std::size_t> end;
        for (std::size_t i = start; i < text.size(); ++i) {
            char c = text[i];
            if (in_string) {
                if (escaped)
                    escaped = false;
                else if (c == '\\')
                    escaped = true;
                else if (c == '"')
                    in_string = false;
                continue;
            }
            if (c == '"')
                in_string = true;
            else if (c == '[')
                ++depth;
            else if (c == ']') {
                --depth;
                if (depth == 0) {
                    end = i;
                    break;
                }
            }
        }
        if (!end)
            continue;
        nlohmann::json parsed;
        try {
            parsed = nlohmann::json::parse(text.substr(start, *end - start + 1));
        } catch (const nlohmann::json::exception&) {
            continue;
        }
        if (!parsed.is_array())
            continue;
        bool all_strings = true;
        for (const nlohmann::json& item : parsed)
            if (!item.is_string()) {
                all_strings = false;
                break;
            }
        if (!all_strings)
            continue;
        std::vector<std::string> out;
        for (const nlohmann::json& item : parsed) {
            std::string s = trim(item.get<std::string>());
            if (!s.empty())
                out.push_back(std::move(s));
        }
        return out;
    }
    throw ParseError("no JSON array of strings found in model output", text);
}

} // namespace semcache
