#pragma once

// The four caption scorers: keyword matching, sentence-embedding cosine,
// greedy token-embedding precision (BERTScore-style) and VLM-as-judge.

#include <harcap/dataset.hpp>
#include <harcap/providers.hpp>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace harcap {

enum class Metric { keywords, cosine, bert_precision, vlm_judge };

inline std::string_view to_string(Metric m) {
    switch (m) {
        case Metric::keywords: return "keywords";
        case Metric::cosine: return "cosine";
        case Metric::bert_precision: return "bert_precision";
        case Metric::vlm_judge: return "vlm_judge";
    }
    return "?";
}

inline std::optional<Metric> metric_from_string(std::string_view s) {
    for (auto m : {Metric::keywords, Metric::cosine, Metric::bert_precision, Metric::vlm_judge}) {
        if (to_string(m) == s) return m;
    }
    return std::nullopt;
}

struct MetricVerdict {
    Metric metric = Metric::keywords;
    bool correct = false;
    std::optional<double> score;
    std::optional<double> threshold;
    std::string detail;
};

struct MetricConfig {
    double cosine_threshold = 0.5;
    double bert_threshold = 0.9;

    void validate() const {
        auto in_unit = [](double t) { return t > 0.0 && t < 1.0; };
        if (!in_unit(cosine_threshold) || !in_unit(bert_threshold)) {
            throw ConfigError("metric thresholds must lie in (0, 1)");
        }
    }
};

/// Strictly above: a score equal to the threshold is a failure.
inline bool exceeds(double score, double threshold) { return score > threshold; }

// ---------------------------------------------------------------------------
// Keywords

inline std::string join(std::span<const std::string> items, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

inline MetricVerdict eval_keywords(std::string_view generated, const ActivityLabel& label,
                                   const KeywordLexicon& lexicon) {
    auto hits = keyword_hits(generated, lexicon.at(label));
    MetricVerdict v;
    v.metric = Metric::keywords;
    v.correct = !hits.empty();
    v.detail = join(hits, ",");
    return v;
}

// ---------------------------------------------------------------------------
// Cosine

inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DimensionMismatch("cosine_similarity: " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na <= 0.0 || nb <= 0.0) throw ZeroVector("cosine_similarity: zero-norm vector");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    return cosine_similarity(a.values, b.values);
}

inline MetricVerdict eval_cosine(const std::string& ground_truth, const std::string& generated,
                                 TextEmbedder& embedder, const MetricConfig& cfg = {}) {
    if (ground_truth.empty() || generated.empty()) {
        throw PreconditionViolation("eval_cosine: empty caption");
    }
    const std::vector<std::string> batch{ground_truth, generated};
    auto vecs = embedder.embed_text(batch);
    MetricVerdict v;
    v.metric = Metric::cosine;
    v.score = cosine_similarity(vecs[0], vecs[1]);
    v.threshold = cfg.cosine_threshold;
    v.correct = exceeds(*v.score, cfg.cosine_threshold);
    v.detail = embedder.model_id();
    return v;
}

// ---------------------------------------------------------------------------
// Token-embedding precision

struct BertScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Greedy matching: precision averages, over candidate tokens, the best
/// cosine against any reference token; recall is the mirror image.
/// No IDF weighting, no baseline rescaling.
inline BertScores bert_scores(const TokenEmbeddings& reference, const TokenEmbeddings& candidate) {
    if (reference.vectors.empty() || candidate.vectors.empty()) {
        throw EmptyTokenization("bert_scores: text produced no tokens");
    }
    const auto n_c = candidate.vectors.size();
    const auto n_r = reference.vectors.size();
    std::vector<double> best_c(n_c, -1.0), best_r(n_r, -1.0);
    for (std::size_t i = 0; i < n_c; ++i) {
        for (std::size_t j = 0; j < n_r; ++j) {
            double s = cosine_similarity(candidate.vectors[i], reference.vectors[j]);
            best_c[i] = std::max(best_c[i], s);
            best_r[j] = std::max(best_r[j], s);
        }
    }
    BertScores out;
    for (double s : best_c) out.precision += s;
    for (double s : best_r) out.recall += s;
    out.precision /= static_cast<double>(n_c);
    out.recall /= static_cast<double>(n_r);
    double denom = out.precision + out.recall;
    out.f1 = denom > 0.0 ? 2.0 * out.precision * out.recall / denom : 0.0;
    return out;
}

inline double bert_precision(const std::string& reference, const std::string& candidate,
                             TokenEmbedder& embedder) {
    if (reference.empty() || candidate.empty()) {
        throw PreconditionViolation("bert_precision: empty text");
    }
    auto ref = embedder.embed_tokens(reference);
    auto cand = embedder.embed_tokens(candidate);
    return bert_scores(ref, cand).precision;
}

/// Verdict from an already computed precision score.
inline MetricVerdict bert_verdict(double precision, const MetricConfig& cfg = {},
                                  std::string detail = {}) {
    MetricVerdict v;
    v.metric = Metric::bert_precision;
    v.score = precision;
    v.threshold = cfg.bert_threshold;
    v.correct = exceeds(precision, cfg.bert_threshold);
    v.detail = std::move(detail);
    return v;
}

inline MetricVerdict cosine_verdict(double score, const MetricConfig& cfg = {},
                                    std::string detail = {}) {
    MetricVerdict v;
    v.metric = Metric::cosine;
    v.score = score;
    v.threshold = cfg.cosine_threshold;
    v.correct = exceeds(score, cfg.cosine_threshold);
    v.detail = std::move(detail);
    return v;
}

inline MetricVerdict eval_bert(const std::string& ground_truth, const std::string& generated,
                               TokenEmbedder& embedder, const MetricConfig& cfg = {}) {
    return bert_verdict(bert_precision(ground_truth, generated, embedder), cfg,
                        embedder.model_id());
}

// ---------------------------------------------------------------------------
// VLM-as-judge

inline const std::string& judge_system_text() {
    static const std::string s =
        "You are an evaluator for human activity recognition. Given video keyframes, a "
        "ground-truth caption and a generated caption, decide whether the generated caption "
        "describes the same activity as the ground truth. Output only True or False.";
    return s;
}

inline const std::string& judge_strict_system_text() {
    static const std::string s =
        "You are an evaluator for human activity recognition. Your previous answer could not be "
        "parsed. Answer with exactly one word, True or False, and nothing else. Output only "
        "True or False.";
    return s;
}

inline std::vector<ChatMessage> build_judge_prompt(std::span<const ImagePayload> images,
                                                   const std::string& ground_truth,
                                                   const std::string& generated,
                                                   bool strict = false) {
    if (images.empty()) throw PreconditionViolation("judge prompt needs at least one image");
    ChatMessage user{Role::user, {}};
    for (const auto& img : images) user.parts.emplace_back(img);
    user.parts.emplace_back("Ground-truth caption: \"" + ground_truth + "\"\nGenerated caption: \"" +
                            generated +
                            "\"\nDoes the generated caption correctly describe the activity? "
                            "Output only True or False.");
    return {ChatMessage::system(strict ? judge_strict_system_text() : judge_system_text()),
            std::move(user)};
}

/// "True" / "False" after trimming whitespace and punctuation, any case.
inline bool parse_judge(std::string_view raw) {
    auto is_junk = [](unsigned char c) { return std::isspace(c) || std::ispunct(c); };
    while (!raw.empty() && is_junk(raw.front())) raw.remove_prefix(1);
    while (!raw.empty() && is_junk(raw.back())) raw.remove_suffix(1);
    auto word = to_lower(raw);
    if (word == "true") return true;
    if (word == "false") return false;
    throw AmbiguousJudgeOutput("judge output is neither True nor False: '" + std::string(raw) + "'");
}

/// Asks the judge once; on an unparseable answer asks again with a stricter
/// system message; a second failure is an abstain, scored incorrect.
inline MetricVerdict eval_judge(const std::string& ground_truth, const std::string& generated,
                                ChatProvider& chat, std::span<const ImagePayload> keyframes,
                                const ChatParams& params) {
    MetricVerdict v;
    v.metric = Metric::vlm_judge;
    std::string raw;
    for (bool strict : {false, true}) {
        raw = chat.chat_complete(build_judge_prompt(keyframes, ground_truth, generated, strict),
                                 params);
        try {
            v.correct = parse_judge(raw);
            v.detail = std::string(trim(raw));
            return v;
        } catch (const AmbiguousJudgeOutput&) {
        }
    }
    v.correct = false;
    v.detail = "abstain";
    return v;
}

}  // namespace harcap
