#pragma once

#include <cctype>
#include <string>
#include <vector>

namespace semcache {

inline bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_ascii_space(s[b]))
        ++b;
    while (e > b && is_ascii_space(s[e - 1]))
        --e;
    return s.substr(b, e - b);
}

inline std::string to_lower(const std::string& s) {
    std::string out = s;
    for (char& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// Dedupe key for questions: lowercase, collapse whitespace runs, trim,
// then strip a single terminal '?', '.' or '!'.
inline std::string normalize_question(const std::string& q) {
    std::string out;
    out.reserve(q.size());
    bool in_space = false;
    for (char raw : q) {
        char c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
        if (is_ascii_space(c)) {
            in_space = true;
            continue;
        }
        if (in_space && !out.empty())
            out.push_back(' ');
        in_space = false;
        out.push_back(c);
    }
    if (!out.empty()) {
        char last = out.back();
        if (last == '?' || last == '.' || last == '!')
            out.pop_back();
    }
    while (!out.empty() && out.back() == ' ')
        out.pop_back();
    return out;
}

// Embedder tokenization: lowercase, split on non-alphanumeric runs.
// Bytes outside [a-z0-9] (after ASCII lowercasing) are split points.
inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char raw : text) {
        char c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
        bool alnum = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
        if (alnum) {
            cur.push_back(c);
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty())
        tokens.push_back(std::move(cur));
    return tokens;
}

} // namespace semcache
