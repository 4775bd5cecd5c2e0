#pragma once

#include <map>
#include <set>
#include <string>

#include "semcache/errors.hpp"

namespace semcache {

// Replaces {name} placeholders, where a placeholder name is one or more
// lowercase letters or underscores. Braces around anything else (JSON
// snippets, code) pass through untouched. A placeholder with no value is
// an error so typos in custom templates surface before any request.
inline std::string render_template(const std::string& tpl,
                                   const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tpl.size());
    std::size_t i = 0;
    while (i < tpl.size()) {
        if (tpl[i] != '{') {
            out.push_back(tpl[i]);
            ++i;
            continue;
        }
        std::size_t close = tpl.find('}', i + 1);
        bool is_name = close != std::string::npos && close > i + 1;
        if (is_name)
            for (std::size_t j = i + 1; j < close; ++j) {
                char c = tpl[j];
                if (!((c >= 'a' && c <= 'z') || c == '_')) {
                    is_name = false;
                    break;
                }
            }
        if (!is_name) {
            out.push_back(tpl[i]);
            ++i;
            continue;
        }
        std::string name = tpl.substr(i + 1, close - i - 1);
        auto it = values.find(name);
        if (it == values.end())
            throw ValidationError("template: no value for placeholder {" + name + "}");
        out += it->second;
        i = close + 1;
    }
    return out;
}

// Placeholders present in a template, using the same name rules as
// render_template.
inline std::set<std::string> template_placeholders(const std::string& tpl) {
    std::set<std::string> names;
    std::size_t i = 0;
    while (i < tpl.size()) {
        if (tpl[i] != '{') {
            ++i;
            continue;
        }
        std::size_t close = tpl.find('}', i + 1);
        bool is_name = close != std::string::npos && close > i + 1;
        if (is_name)
            for (std::size_t j = i + 1; j < close; ++j) {
                char c = tpl[j];
                if (!((c >= 'a' && c <= 'z') || c == '_')) {
                    is_name = false;
                    break;
                }
            }
        if (is_name) {
            names.insert(tpl.substr(i + 1, close - i - 1));
            i = close + 1;
        } else {
            ++i;
        }
    }
    return names;
}

inline void validate_template(const std::string& tpl, const std::set<std::string>& allowed,
                              const std::string& which) {
    for (const std::string& name : template_placeholders(tpl))
        if (!allowed.count(name))
            throw ValidationError("template " + which + ": unknown placeholder {" + name + "}");
}

struct PromptTemplates {
    std::string extract_facts;
    std::string generate_question;
    std::string generate_variations;
    std::string guidelines;

    void validate() const {
        validate_template(extract_facts, {"document_text"}, "extract_facts");
        validate_template(generate_question, {"answer", "document_text", "domain_terms"},
                          "generate_question");
        validate_template(generate_variations, {"question", "answer", "guidelines"},
                          "generate_variations");
        validate_template(guidelines, {"count"}, "guidelines");
        if (template_placeholders(extract_facts).count("document_text") == 0)
            throw ValidationError("template extract_facts: missing {document_text}");
        if (template_placeholders(generate_question).count("answer") == 0)
            throw ValidationError("template generate_question: missing {answer}");
        if (template_placeholders(generate_variations).count("question") == 0)
            throw ValidationError("template generate_variations: missing {question}");
    }
};

inline PromptTemplates default_prompt_templates() {
    PromptTemplates t;
    t.extract_facts =
        "Document:\n{document_text}\n\n"
        "List the distinct factual statements in the document above. Each fact must be a "
        "single self-contained sentence that can serve as the answer to a question. "
        "Skip opinions and headings.\n\n"
        "Return ONLY a JSON array of strings.";
    t.generate_question =
        "Fact: {answer}\n\nDocument:\n{document_text}\n\nDomain terms: {domain_terms}\n\n"
        "Write exactly one question that is fully answered by the Fact above, is specific "
        "to this document, and uses the document's own terminology.\n\n"
        "Return ONLY a JSON array containing exactly one string.";
    t.generate_variations =
        "Question: {question}\nAnswer: {answer}\n\n"
        "Generate variations ONLY from the provided Question above and ONLY use the Answer "
        "to constrain the generated questions.\n\n"
        "Variation Guidelines: {guidelines}\nResponse:";
    t.guidelines =
        "Rephrase the question in distinct ways while keeping its meaning. Change wording, "
        "sentence structure, and phrasing style; swap keywords for synonyms where the answer "
        "still fully answers the result. Do not introduce facts beyond the question and "
        "answer. Every variation must remain answerable by the same answer. "
        "Produce {count} variations. Return ONLY a JSON array of strings.";
    return t;
}

inline const std::string kExtractSystemPrompt =
    "You turn documents into question-answer test data. Follow the output format exactly.";
inline const std::string kVariationSystemPrompt =
    "You rewrite questions as paraphrases for cache testing. Follow the output format exactly.";

// Sent once per malformed response before giving up on the item.
inline const std::string kRepairSuffix = "\n\nReturn ONLY a JSON array of strings.";

} // namespace semcache
