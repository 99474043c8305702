#pragma once

// Token normalization and keyword matching. Shared by caption generation
// (keyword verification) and the keyword-matching scorer so both always
// agree on what counts as a hit.

#include <algorithm>
#include <cctype>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace harcap {

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline std::string_view trim(std::string_view s) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

namespace detail {

inline bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

inline bool sibilant_before_es(std::string_view stem) {
    return ends_with(stem, "s") || ends_with(stem, "x") || ends_with(stem, "z") ||
           ends_with(stem, "ch") || ends_with(stem, "sh");
}

constexpr std::size_t kMinStem = 3;

// One suffix-strip step; returns false when nothing applies.
inline bool strip_once(std::string& tok) {
    if (ends_with(tok, "ing") && tok.size() - 3 >= kMinStem) {
        tok.resize(tok.size() - 3);
        return true;
    }
    if (ends_with(tok, "ed") && tok.size() - 2 >= kMinStem) {
        tok.resize(tok.size() - 2);
        return true;
    }
    if (ends_with(tok, "es") && tok.size() - 2 >= kMinStem &&
        sibilant_before_es(std::string_view(tok).substr(0, tok.size() - 2))) {
        tok.resize(tok.size() - 2);
        return true;
    }
    if (ends_with(tok, "s") && !ends_with(tok, "ss") && tok.size() - 1 >= kMinStem) {
        tok.resize(tok.size() - 1);
        return true;
    }
    return false;
}

}  // namespace detail

/// Suffix-normalizes a single lowercase alphanumeric token. Iterated to a
/// fixpoint, so stem(stem(t)) == stem(t).
inline std::string stem(std::string tok) {
    while (detail::strip_once(tok)) {
    }
    return tok;
}

/// Lowercases, splits on non-alphanumeric boundaries and stems each token.
/// Token order is preserved; empty tokens never appear.
inline std::vector<std::string> normalize_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) out.push_back(stem(std::exchange(cur, {})));
    };
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    return out;
}

/// Splits on non-alphanumeric boundaries and lowercases, without stemming.
inline std::vector<std::string> plain_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::exchange(cur, {}));
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

/// Two stems match when equal or when one is the other plus a silent "e"
/// ("wip" from "wiping" vs. "wipe").
inline bool stems_match(std::string_view a, std::string_view b) {
    if (a == b) return true;
    if (a.size() + 1 == b.size() && b.back() == 'e' && b.substr(0, a.size()) == a) return true;
    if (b.size() + 1 == a.size() && a.back() == 'e' && a.substr(0, b.size()) == b) return true;
    return false;
}

/// Keywords from `keywords` present in `caption`, in keyword order, without
/// duplicates. A keyword matches when its normalized token run occurs
/// contiguously among the caption's normalized tokens.
inline std::vector<std::string> keyword_hits(std::string_view caption,
                                             std::span<const std::string> keywords) {
    const auto tokens = normalize_tokens(caption);
    std::vector<std::string> hits;
    for (const auto& kw : keywords) {
        if (std::find(hits.begin(), hits.end(), kw) != hits.end()) continue;
        const auto kw_tokens = normalize_tokens(kw);
        if (kw_tokens.empty() || kw_tokens.size() > tokens.size()) continue;
        for (std::size_t i = 0; i + kw_tokens.size() <= tokens.size(); ++i) {
            bool all = true;
            for (std::size_t j = 0; j < kw_tokens.size() && all; ++j) {
                all = stems_match(tokens[i + j], kw_tokens[j]);
            }
            if (all) {
                hits.push_back(kw);
                break;
            }
        }
    }
    return hits;
}

}  // namespace harcap
