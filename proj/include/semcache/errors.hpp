#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace semcache {

// Base for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input that could not be parsed (JSONL lines, LLM responses).
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what, std::string raw = {})
        : Error(what), raw_(std::move(raw)) {}

    // The unparseable text, kept for logging and repair prompts.
    const std::string& raw() const { return raw_; }

private:
    std::string raw_;
};

// Well-formed input that violates a documented invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

// A remote service answered outside its documented contract
// (wrong embedding dimension, score out of range, missing fields).
class ContractViolation : public Error {
public:
    using Error::Error;
};

// Transport or service failure from an embedding/LLM/scorer provider.
// `transient` marks failures worth retrying (connect errors, 5xx, 429).
class ProviderError : public Error {
public:
    ProviderError(const std::string& what, bool transient,
                  std::optional<int> http_status = std::nullopt, int attempts = 1)
        : Error(what), transient_(transient), http_status_(http_status), attempts_(attempts) {}

    bool transient() const { return transient_; }
    std::optional<int> http_status() const { return http_status_; }
    int attempts() const { return attempts_; }

private:
    bool transient_;
    std::optional<int> http_status_;
    int attempts_;
};

} // namespace semcache
