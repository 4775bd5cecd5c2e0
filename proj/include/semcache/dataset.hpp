#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "semcache/errors.hpp"
#include "semcache/text.hpp"

namespace semcache {

using json = nlohmann::json;

// ── domain types ────────────────────────────────────────────────

struct Document {
    std::string doc_id;
    std::string text;
    std::optional<std::string> title;
    std::optional<std::vector<std::string>> domain_terms;

    bool operator==(const Document&) const = default;

    void validate() const {
        if (doc_id.empty())
            throw ValidationError("document: doc_id must be non-empty");
        if (trim(text).empty())
            throw ValidationError("document " + doc_id + ": text is empty after trim");
    }
};

enum class CreatedBy { llm, human, fixture };

inline std::string to_string(CreatedBy c) {
    switch (c) {
    case CreatedBy::llm: return "llm";
    case CreatedBy::human: return "human";
    case CreatedBy::fixture: return "fixture";
    }
    throw ValidationError("created_by: unknown enum value");
}

inline CreatedBy created_by_from_string(const std::string& s) {
    if (s == "llm") return CreatedBy::llm;
    if (s == "human") return CreatedBy::human;
    if (s == "fixture") return CreatedBy::fixture;
    throw ValidationError("created_by: unknown value \"" + s + "\"");
}

struct QAPair {
    std::string qa_id;
    std::string question;
    std::string answer;
    std::string source_doc_id;
    bool verified = false;
    CreatedBy created_by = CreatedBy::llm;

    bool operator==(const QAPair&) const = default;

    void validate() const {
        if (qa_id.empty())
            throw ValidationError("qa pair: qa_id must be non-empty");
        if (trim(question).empty())
            throw ValidationError("qa pair " + qa_id + ": question is empty");
        if (trim(answer).empty())
            throw ValidationError("qa pair " + qa_id + ": answer is empty");
        if (source_doc_id.empty())
            throw ValidationError("qa pair " + qa_id + ": source_doc_id is empty");
    }
};

// An original question plus its paraphrase variations. Group membership is
// the semantic-equivalence ground truth the evaluation harness judges against.
struct VariationGroup {
    std::string group_id;
    QAPair original;
    std::vector<std::string> variations;
    std::string answer;

    bool operator==(const VariationGroup&) const = default;

    // Members (original + variations) must be distinct after normalization.
    void validate() const {
        if (group_id.empty())
            throw ValidationError("group: group_id must be non-empty");
        original.validate();
        std::set<std::string> seen;
        seen.insert(normalize_question(original.question));
        for (const std::string& v : variations) {
            if (trim(v).empty())
                throw ValidationError("group " + group_id + ": empty variation");
            if (!seen.insert(normalize_question(v)).second)
                throw ValidationError("group " + group_id +
                                      ": duplicate member after normalization: \"" + v + "\"");
        }
    }

    std::size_t size() const { return 1 + variations.size(); }
};

enum class Outcome { correct_hit, incorrect_hit, correct_miss, incorrect_miss };

inline std::string to_string(Outcome o) {
    switch (o) {
    case Outcome::correct_hit: return "correct_hit";
    case Outcome::incorrect_hit: return "incorrect_hit";
    case Outcome::correct_miss: return "correct_miss";
    case Outcome::incorrect_miss: return "incorrect_miss";
    }
    throw ValidationError("outcome: unknown enum value");
}

inline Outcome outcome_from_string(const std::string& s) {
    if (s == "correct_hit") return Outcome::correct_hit;
    if (s == "incorrect_hit") return Outcome::incorrect_hit;
    if (s == "correct_miss") return Outcome::correct_miss;
    if (s == "incorrect_miss") return Outcome::incorrect_miss;
    throw ValidationError("outcome: unknown value \"" + s + "\"");
}

struct EvalRecord {
    std::string query;
    std::string group_id;
    Outcome outcome = Outcome::correct_miss;
    std::optional<std::string> matched_group_id;
    std::optional<double> similarity_score;
    std::uint64_t sequence_index = 0;

    bool operator==(const EvalRecord&) const = default;

    void validate() const {
        switch (outcome) {
        case Outcome::correct_hit:
            if (!matched_group_id || *matched_group_id != group_id)
                throw ValidationError("eval record: correct_hit requires matched_group_id == group_id");
            break;
        case Outcome::incorrect_hit:
            if (!matched_group_id || *matched_group_id == group_id)
                throw ValidationError("eval record: incorrect_hit requires a different matched_group_id");
            break;
        case Outcome::correct_miss:
        case Outcome::incorrect_miss:
            if (matched_group_id)
                throw ValidationError("eval record: misses must not carry matched_group_id");
            break;
        }
        if (similarity_score && (*similarity_score < -1.0 || *similarity_score > 1.0))
            throw ValidationError("eval record: similarity_score outside [-1, 1]");
    }
};

// ── json mapping ────────────────────────────────────────────────

inline json to_json(const Document& d) {
    json j = {{"doc_id", d.doc_id}, {"text", d.text}};
    if (d.title)
        j["title"] = *d.title;
    if (d.domain_terms)
        j["domain_terms"] = *d.domain_terms;
    return j;
}

inline Document document_from_json(const json& j) {
    Document d;
    d.doc_id = j.at("doc_id").get<std::string>();
    d.text = j.at("text").get<std::string>();
    if (j.contains("title"))
        d.title = j.at("title").get<std::string>();
    if (j.contains("domain_terms"))
        d.domain_terms = j.at("domain_terms").get<std::vector<std::string>>();
    d.validate();
    return d;
}

inline json to_json(const QAPair& p) {
    return {{"qa_id", p.qa_id},
            {"question", p.question},
            {"answer", p.answer},
            {"source_doc_id", p.source_doc_id},
            {"verified", p.verified},
            {"created_by", to_string(p.created_by)}};
}

inline QAPair qa_pair_from_json(const json& j) {
    QAPair p;
    p.qa_id = j.at("qa_id").get<std::string>();
    p.question = j.at("question").get<std::string>();
    p.answer = j.at("answer").get<std::string>();
    p.source_doc_id = j.at("source_doc_id").get<std::string>();
    p.verified = j.at("verified").get<bool>();
    p.created_by = created_by_from_string(j.at("created_by").get<std::string>());
    p.validate();
    return p;
}

inline json to_json(const VariationGroup& g) {
    return {{"group_id", g.group_id},
            {"original", to_json(g.original)},
            {"variations", g.variations},
            {"answer", g.answer}};
}

inline VariationGroup group_from_json(const json& j) {
    VariationGroup g;
    g.group_id = j.at("group_id").get<std::string>();
    g.original = qa_pair_from_json(j.at("original"));
    g.variations = j.at("variations").get<std::vector<std::string>>();
    g.answer = j.at("answer").get<std::string>();
    g.validate();
    return g;
}

inline json to_json(const EvalRecord& r) {
    json j = {{"query", r.query},
              {"group_id", r.group_id},
              {"outcome", to_string(r.outcome)},
              {"sequence_index", r.sequence_index}};
    if (r.matched_group_id)
        j["matched_group_id"] = *r.matched_group_id;
    if (r.similarity_score)
        j["similarity_score"] = *r.similarity_score;
    return j;
}

inline EvalRecord eval_record_from_json(const json& j) {
    EvalRecord r;
    r.query = j.at("query").get<std::string>();
    r.group_id = j.at("group_id").get<std::string>();
    r.outcome = outcome_from_string(j.at("outcome").get<std::string>());
    if (j.contains("matched_group_id"))
        r.matched_group_id = j.at("matched_group_id").get<std::string>();
    if (j.contains("similarity_score"))
        r.similarity_score = j.at("similarity_score").get<double>();
    r.sequence_index = j.at("sequence_index").get<std::uint64_t>();
    r.validate();
    return r;
}

// ── jsonl files ─────────────────────────────────────────────────

namespace detail {

template <typename T, typename FromJson>
std::vector<T> read_jsonl(const std::string& path, FromJson from_json_fn) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open " + path);
    std::vector<T> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty())
            continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": malformed JSON line: " +
                             e.what(), line);
        }
        try {
            out.push_back(from_json_fn(j));
        } catch (const json::exception& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what(), line);
        } catch (const ValidationError& e) {
            throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

template <typename T, typename ToJson>
void write_jsonl(const std::vector<T>& items, const std::string& path, ToJson to_json_fn) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot write " + path);
    for (const T& item : items)
        out << to_json_fn(item).dump() << "\n";
    if (!out)
        throw Error("write failed for " + path);
}

} // namespace detail

inline std::vector<Document> read_corpus(const std::string& path) {
    auto docs = detail::read_jsonl<Document>(path, document_from_json);
    std::set<std::string> ids;
    for (const Document& d : docs)
        if (!ids.insert(d.doc_id).second)
            throw ValidationError(path + ": duplicate doc_id \"" + d.doc_id + "\"");
    return docs;
}

inline void write_corpus(const std::vector<Document>& docs, const std::string& path) {
    detail::write_jsonl(docs, path, [](const Document& d) { return to_json(d); });
}

inline std::vector<QAPair> read_qa_pairs(const std::string& path) {
    auto pairs = detail::read_jsonl<QAPair>(path, qa_pair_from_json);
    std::set<std::string> ids;
    for (const QAPair& p : pairs)
        if (!ids.insert(p.qa_id).second)
            throw ValidationError(path + ": duplicate qa_id \"" + p.qa_id + "\"");
    return pairs;
}

inline void write_qa_pairs(const std::vector<QAPair>& pairs, const std::string& path) {
    for (const QAPair& p : pairs)
        p.validate();
    detail::write_jsonl(pairs, path, [](const QAPair& p) { return to_json(p); });
}

inline std::vector<VariationGroup> read_dataset(const std::string& path) {
    auto groups = detail::read_jsonl<VariationGroup>(path, group_from_json);
    std::set<std::string> ids;
    for (const VariationGroup& g : groups)
        if (!ids.insert(g.group_id).second)
            throw ValidationError(path + ": duplicate group_id \"" + g.group_id + "\"");
    return groups;
}

inline void write_dataset(const std::vector<VariationGroup>& groups, const std::string& path) {
    std::set<std::string> ids;
    for (const VariationGroup& g : groups) {
        g.validate();
        if (!ids.insert(g.group_id).second)
            throw ValidationError("duplicate group_id \"" + g.group_id + "\"");
    }
    detail::write_jsonl(groups, path, [](const VariationGroup& g) { return to_json(g); });
}

inline std::vector<EvalRecord> read_eval_records(const std::string& path) {
    return detail::read_jsonl<EvalRecord>(path, eval_record_from_json);
}

inline void write_eval_records(const std::vector<EvalRecord>& records, const std::string& path) {
    detail::write_jsonl(records, path, [](const EvalRecord& r) { return to_json(r); });
}

// Cross-group duplicate questions are legal (they are hard negatives by
// construction) but worth flagging; within-group duplicates are errors
// caught by VariationGroup::validate.
inline std::vector<std::string> dataset_warnings(const std::vector<VariationGroup>& groups) {
    std::vector<std::string> warnings;
    std::map<std::string, std::string> first_group; // normalized question -> group_id
    for (const VariationGroup& g : groups) {
        std::vector<std::string> members;
        members.push_back(g.original.question);
        members.insert(members.end(), g.variations.begin(), g.variations.end());
        for (const std::string& m : members) {
            std::string key = normalize_question(m);
            auto [it, inserted] = first_group.emplace(key, g.group_id);
            if (!inserted && it->second != g.group_id)
                warnings.push_back("question \"" + m + "\" in group " + g.group_id +
                                   " duplicates a question in group " + it->second);
        }
    }
    return warnings;
}

} // namespace semcache
