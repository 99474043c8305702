#pragma once

// Ground-truth caption generation: prompt a VLM with keyframes, the activity
// label and its keywords; re-prompt with a keyword-emphasizing template
// until the caption contains a keyword or the attempt budget runs out.

#include <harcap/dataset.hpp>
#include <harcap/providers.hpp>

#include <string>
#include <vector>

namespace harcap {

struct PromptTemplate {
    std::string system_text;
    std::string initial_user_text;  // {label}, {keywords}
    std::string refine_user_text;   // {label}, {keywords}

    void validate() const {
        if (initial_user_text.find("{keywords}") == std::string::npos ||
            refine_user_text.find("{keywords}") == std::string::npos) {
            throw ConfigError("caption templates must reference {keywords}");
        }
        if (initial_user_text == refine_user_text) {
            throw ConfigError("refine template must differ from the initial template");
        }
    }

    static PromptTemplate defaults() {
        return {
            "You write short, factual ground-truth captions describing what a person in "
            "video keyframes is doing.",
            "The frames show the activity \"{label}\". Write one sentence describing the "
            "activity. Use at least one of these keywords: {keywords}.",
            "The frames show the activity \"{label}\". Write one sentence describing the "
            "activity. Your previous caption used none of the keywords. You MUST include at "
            "least one of these exact keywords: {keywords}.",
        };
    }
};

struct GenerationAttempt {
    std::string prompt_text;
    std::string response_text;
    std::vector<std::string> matched_keywords;
};

struct GenerationTrace {
    std::string video_id;
    std::vector<GenerationAttempt> attempts;
};

struct GenerationResult {
    CaptionRecord record;
    GenerationTrace trace;
};

struct CoverageReport {
    std::size_t total = 0;
    std::size_t verified = 0;
    double coverage_fraction = 1.0;
    std::vector<std::string> offending_ids;
    bool empty = false;
};

struct CaptionGenConfig {
    int max_attempts = 5;
    std::size_t max_images = 2;
    ChatParams chat;
};

inline std::string replace_all(std::string s, std::string_view from, std::string_view to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
    return s;
}

inline std::string fill_template(const std::string& tpl, const ActivityLabel& label,
                                 std::span<const std::string> keywords) {
    std::string joined;
    for (std::size_t i = 0; i < keywords.size(); ++i) {
        if (i) joined += ", ";
        joined += keywords[i];
    }
    return replace_all(replace_all(tpl, "{label}", label), "{keywords}", joined);
}

namespace detail {

inline std::vector<ChatMessage> build_caption_prompt(const std::string& user_template,
                                                     const ActivityLabel& label,
                                                     std::span<const std::string> keywords,
                                                     std::span<const ImagePayload> images,
                                                     const PromptTemplate& tpl,
                                                     std::size_t max_images) {
    if (keywords.empty()) throw PreconditionViolation("caption prompt needs at least one keyword");
    if (images.empty()) throw PreconditionViolation("caption prompt needs at least one image");
    if (images.size() > max_images) {
        throw TooManyImages(std::to_string(images.size()) + " images exceed the limit of " +
                            std::to_string(max_images));
    }
    ChatMessage user{Role::user, {}};
    for (const auto& img : images) user.parts.emplace_back(img);
    user.parts.emplace_back(fill_template(user_template, label, keywords));
    return {ChatMessage::system(tpl.system_text), std::move(user)};
}

}  // namespace detail

/// System message plus one user message: the images, then the filled
/// initial template.
inline std::vector<ChatMessage> build_initial_prompt(const ActivityLabel& label,
                                                     std::span<const std::string> keywords,
                                                     std::span<const ImagePayload> images,
                                                     const PromptTemplate& tpl,
                                                     std::size_t max_images = 2) {
    return detail::build_caption_prompt(tpl.initial_user_text, label, keywords, images, tpl,
                                        max_images);
}

inline std::vector<ChatMessage> build_refine_prompt(const ActivityLabel& label,
                                                    std::span<const std::string> keywords,
                                                    std::span<const ImagePayload> images,
                                                    const PromptTemplate& tpl,
                                                    std::size_t max_images = 2) {
    return detail::build_caption_prompt(tpl.refine_user_text, label, keywords, images, tpl,
                                        max_images);
}

/// Runs the generate / check / refine loop for one video. A caption that
/// never lands a keyword yields status `exhausted`; only provider failures
/// throw.
inline GenerationResult generate_caption(const VideoRecord& video, const KeywordLexicon& lexicon,
                                         std::span<const ImagePayload> keyframes,
                                         ChatProvider& chat, const PromptTemplate& tpl,
                                         const CaptionGenConfig& cfg = {}) {
    if (cfg.max_attempts < 1) throw PreconditionViolation("max_attempts must be >= 1");
    const auto& keywords = lexicon.at(video.label);

    GenerationResult out;
    out.trace.video_id = video.video_id;
    out.record.video_id = video.video_id;
    out.record.label = video.label;
    for (int attempt = 1; attempt <= cfg.max_attempts; ++attempt) {
        auto messages = attempt == 1
                            ? build_initial_prompt(video.label, keywords, keyframes, tpl, cfg.max_images)
                            : build_refine_prompt(video.label, keywords, keyframes, tpl, cfg.max_images);
        auto response = chat.chat_complete(messages, cfg.chat);
        auto hits = keyword_hits(response, keywords);
        out.trace.attempts.push_back({messages.back().text(), response, hits});
        out.record.attempts = attempt;
        out.record.caption = response;
        if (!hits.empty()) {
            out.record.matched_keywords = std::move(hits);
            out.record.status = CaptionStatus::verified;
            return out;
        }
    }
    out.record.matched_keywords.clear();
    out.record.status = CaptionStatus::exhausted;
    return out;
}

/// Recomputes keyword hits for every record; stored matched_keywords are
/// not trusted.
inline CoverageReport verify_dataset(std::span<const CaptionRecord> records,
                                     const KeywordLexicon& lexicon) {
    CoverageReport rep;
    rep.total = records.size();
    for (const auto& r : records) {
        bool ok = lexicon.contains(r.label) && !keyword_hits(r.caption, lexicon.at(r.label)).empty();
        if (ok) ++rep.verified;
        else rep.offending_ids.push_back(r.video_id);
    }
    if (rep.total == 0) {
        rep.empty = true;
        rep.coverage_fraction = 1.0;
    } else {
        rep.coverage_fraction = static_cast<double>(rep.verified) / static_cast<double>(rep.total);
    }
    return rep;
}

inline ordered_json to_json(const GenerationTrace& t) {
    ordered_json attempts = ordered_json::array();
    for (const auto& a : t.attempts) {
        attempts.push_back({{"prompt_text", a.prompt_text},
                            {"response_text", a.response_text},
                            {"matched_keywords", a.matched_keywords}});
    }
    return {{"video_id", t.video_id}, {"attempts", std::move(attempts)}};
}

inline GenerationTrace trace_from_json(const json& j) {
    GenerationTrace t;
    t.video_id = j.at("video_id").get<std::string>();
    for (const auto& a : j.at("attempts")) {
        t.attempts.push_back({a.at("prompt_text").get<std::string>(),
                              a.at("response_text").get<std::string>(),
                              a.at("matched_keywords").get<std::vector<std::string>>()});
    }
    return t;
}

inline ordered_json to_json(const CoverageReport& r) {
    ordered_json j;
    j["total"] = r.total;
    j["verified"] = r.verified;
    j["coverage_fraction"] = r.coverage_fraction;
    j["offending_ids"] = r.offending_ids;
    j["empty"] = r.empty;
    return j;
}

}  // namespace harcap
