#pragma once

// Run configuration: one JSON document. Relative paths resolve against the
// directory holding the config file.

#include <harcap/captiongen.hpp>
#include <harcap/dataset.hpp>
#include <harcap/keyframe.hpp>
#include <harcap/metrics.hpp>

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace harcap {

struct ProviderConfig {
    std::string kind = "mock";  // mock | http
    std::string base_url;
    std::string model_id = "mock";
    int max_tokens = 256;
    double temperature = 0.0;
    std::size_t max_in_flight = 4;
    int timeout_ms = 60000;
    int retry_attempts = 3;
    int retry_delay_ms = 500;
    std::size_t dimension = 384;  // mock embedders
    // mock chat behaviour
    bool mock_miss_first = true;
    std::string mock_refine_marker = "MUST";
    std::set<std::string> mock_off_topic_labels;
    int mock_latency_ms = 0;

    ChatParams chat_params() const { return {model_id, max_tokens, temperature}; }
};

struct EvaluateConfig {
    std::string split = "CS";  // CS | CV | CV1 | CV2 | phase1 | all
    std::size_t samples_per_class = 10;
};

struct RunConfig {
    fs::path config_path;
    fs::path manifest;
    fs::path lexicon;
    std::optional<fs::path> templates;
    fs::path out_dir = "out";
    fs::path cache_dir = "cache";
    std::uint64_t seed = 0;
    std::size_t parallelism = 4;
    std::size_t frames_per_prompt = 2;
    std::size_t max_frames_per_prompt = 2;
    int max_attempts = 5;
    std::vector<Metric> metrics{Metric::keywords, Metric::cosine};
    MetricConfig thresholds;
    KeyframeConfig keyframe;
    EvaluateConfig evaluate;
    std::string decode_command;  // "{video}" and "{frames_dir}" placeholders

    ProviderConfig caption_provider;
    ProviderConfig judge_provider;
    std::map<std::string, ProviderConfig> candidates;
    ProviderConfig embedder = hash_embedder_defaults();
    ProviderConfig token_embedder = hash_embedder_defaults();

    void validate() const {
        if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
        if (frames_per_prompt < 1 || frames_per_prompt > max_frames_per_prompt) {
            throw ConfigError("frames_per_prompt must be in [1, " +
                              std::to_string(max_frames_per_prompt) + "]");
        }
        if (max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
        thresholds.validate();
        static const std::set<std::string> splits{"CS", "CV", "CV1", "CV2", "phase1", "all"};
        if (!splits.count(evaluate.split)) {
            throw ConfigError("evaluate.split must be one of CS, CV, CV1, CV2, phase1, all");
        }
        if (evaluate.samples_per_class < 1) throw ConfigError("samples_per_class must be >= 1");
        for (const auto* p : {&caption_provider, &judge_provider, &embedder, &token_embedder}) {
            check_provider(*p);
        }
        for (const auto& [_, p] : candidates) check_provider(p);
    }

    /// Effective configuration, reloadable by parse_config.
    ordered_json snapshot() const;

private:
    static ProviderConfig hash_embedder_defaults() {
        ProviderConfig p;
        p.model_id = "mock-hash-384";
        return p;
    }

    static void check_provider(const ProviderConfig& p) {
        if (p.kind != "mock" && p.kind != "http") {
            throw ConfigError("provider kind must be 'mock' or 'http', got '" + p.kind + "'");
        }
        if (p.kind == "http" && p.base_url.empty()) throw ConfigError("http provider needs base_url");
        if (p.max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
    }
};

namespace detail {

template <class T>
void read_opt(const json& j, const char* key, T& out) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

inline ProviderConfig parse_provider(const json& j, ProviderConfig p) {
    if (!j.is_object()) throw ConfigError("provider entry must be an object");
    static const std::set<std::string> known{"kind", "base_url", "model_id", "max_tokens",
                                             "temperature", "max_in_flight", "timeout_ms",
                                             "retry_attempts", "retry_delay_ms", "dimension",
                                             "mock"};
    for (const auto& [k, _] : j.items()) {
        if (!known.count(k)) throw ConfigError("unknown provider key '" + k + "'");
    }
    read_opt(j, "kind", p.kind);
    read_opt(j, "base_url", p.base_url);
    read_opt(j, "model_id", p.model_id);
    read_opt(j, "max_tokens", p.max_tokens);
    read_opt(j, "temperature", p.temperature);
    read_opt(j, "max_in_flight", p.max_in_flight);
    read_opt(j, "timeout_ms", p.timeout_ms);
    read_opt(j, "retry_attempts", p.retry_attempts);
    read_opt(j, "retry_delay_ms", p.retry_delay_ms);
    read_opt(j, "dimension", p.dimension);
    if (j.contains("mock")) {
        const auto& m = j.at("mock");
        read_opt(m, "miss_first", p.mock_miss_first);
        read_opt(m, "refine_marker", p.mock_refine_marker);
        read_opt(m, "off_topic_labels", p.mock_off_topic_labels);
        read_opt(m, "latency_ms", p.mock_latency_ms);
    }
    return p;
}

inline ordered_json provider_json(const ProviderConfig& p) {
    ordered_json j;
    j["kind"] = p.kind;
    j["base_url"] = p.base_url;
    j["model_id"] = p.model_id;
    j["max_tokens"] = p.max_tokens;
    j["temperature"] = p.temperature;
    j["max_in_flight"] = p.max_in_flight;
    j["timeout_ms"] = p.timeout_ms;
    j["retry_attempts"] = p.retry_attempts;
    j["retry_delay_ms"] = p.retry_delay_ms;
    j["dimension"] = p.dimension;
    j["mock"] = {{"miss_first", p.mock_miss_first},
                 {"refine_marker", p.mock_refine_marker},
                 {"off_topic_labels", p.mock_off_topic_labels},
                 {"latency_ms", p.mock_latency_ms}};
    return j;
}

inline fs::path resolve(const fs::path& base, const fs::path& p) {
    return p.is_absolute() ? p : (base / p).lexically_normal();
}

}  // namespace detail

/// Parses a config document. `base_dir` anchors relative paths.
inline RunConfig parse_config(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    static const std::set<std::string> known{
        "manifest", "lexicon",     "templates", "out_dir",   "cache_dir",
        "seed",     "parallelism", "frames_per_prompt", "max_frames_per_prompt",
        "max_attempts", "metrics", "thresholds", "keyframe", "evaluate",
        "decode_command", "providers"};
    for (const auto& [k, _] : j.items()) {
        if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");
    }

    RunConfig c;
    std::string s;
    if (!j.contains("manifest")) throw ConfigError("config lacks 'manifest'");
    if (!j.contains("lexicon")) throw ConfigError("config lacks 'lexicon'");
    detail::read_opt(j, "manifest", s);
    c.manifest = detail::resolve(base_dir, s);
    detail::read_opt(j, "lexicon", s);
    c.lexicon = detail::resolve(base_dir, s);
    if (j.contains("templates")) {
        detail::read_opt(j, "templates", s);
        c.templates = detail::resolve(base_dir, s);
    }
    s = c.out_dir.string();
    detail::read_opt(j, "out_dir", s);
    c.out_dir = detail::resolve(base_dir, s);
    s = c.cache_dir.string();
    detail::read_opt(j, "cache_dir", s);
    c.cache_dir = detail::resolve(base_dir, s);
    detail::read_opt(j, "seed", c.seed);
    detail::read_opt(j, "parallelism", c.parallelism);
    detail::read_opt(j, "frames_per_prompt", c.frames_per_prompt);
    detail::read_opt(j, "max_frames_per_prompt", c.max_frames_per_prompt);
    detail::read_opt(j, "max_attempts", c.max_attempts);
    detail::read_opt(j, "decode_command", c.decode_command);

    if (j.contains("metrics")) {
        std::vector<std::string> names;
        detail::read_opt(j, "metrics", names);
        c.metrics.clear();
        for (const auto& n : names) {
            auto m = metric_from_string(n);
            if (!m) throw ConfigError("unknown metric '" + n + "'");
            if (std::find(c.metrics.begin(), c.metrics.end(), *m) == c.metrics.end()) {
                c.metrics.push_back(*m);
            }
        }
        if (c.metrics.empty()) throw ConfigError("metrics list is empty");
    }
    if (j.contains("thresholds")) {
        detail::read_opt(j.at("thresholds"), "cosine", c.thresholds.cosine_threshold);
        detail::read_opt(j.at("thresholds"), "bert", c.thresholds.bert_threshold);
    }
    if (j.contains("keyframe")) {
        const auto& k = j.at("keyframe");
        detail::read_opt(k, "min_diff", c.keyframe.min_diff);
        detail::read_opt(k, "min_brightness", c.keyframe.min_brightness);
        detail::read_opt(k, "max_brightness", c.keyframe.max_brightness);
        detail::read_opt(k, "min_entropy", c.keyframe.min_entropy);
    }
    if (j.contains("evaluate")) {
        detail::read_opt(j.at("evaluate"), "split", c.evaluate.split);
        detail::read_opt(j.at("evaluate"), "samples_per_class", c.evaluate.samples_per_class);
    }
    if (j.contains("providers")) {
        const auto& p = j.at("providers");
        static const std::set<std::string> roles{"caption", "judge", "candidates", "embedder",
                                                 "token_embedder"};
        for (const auto& [k, _] : p.items()) {
            if (!roles.count(k)) throw ConfigError("unknown provider role '" + k + "'");
        }
        if (p.contains("caption")) c.caption_provider = detail::parse_provider(p["caption"], c.caption_provider);
        if (p.contains("judge")) c.judge_provider = detail::parse_provider(p["judge"], c.judge_provider);
        if (p.contains("embedder")) c.embedder = detail::parse_provider(p["embedder"], c.embedder);
        if (p.contains("token_embedder")) {
            c.token_embedder = detail::parse_provider(p["token_embedder"], c.token_embedder);
        }
        if (p.contains("candidates")) {
            for (const auto& [name, pj] : p["candidates"].items()) {
                ProviderConfig def;
                def.model_id = name;
                c.candidates[name] = detail::parse_provider(pj, def);
            }
        }
    }
    c.keyframe.seed = c.seed;
    c.validate();
    return c;
}

inline RunConfig load_config(const fs::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
    auto c = parse_config(j, fs::absolute(path).parent_path());
    c.config_path = fs::absolute(path);
    return c;
}

inline ordered_json RunConfig::snapshot() const {
    ordered_json j;
    j["manifest"] = manifest.string();
    j["lexicon"] = lexicon.string();
    if (templates) j["templates"] = templates->string();
    j["out_dir"] = out_dir.string();
    j["cache_dir"] = cache_dir.string();
    j["seed"] = seed;
    j["parallelism"] = parallelism;
    j["frames_per_prompt"] = frames_per_prompt;
    j["max_frames_per_prompt"] = max_frames_per_prompt;
    j["max_attempts"] = max_attempts;
    std::vector<std::string> names;
    for (auto m : metrics) names.emplace_back(to_string(m));
    j["metrics"] = names;
    j["thresholds"] = {{"cosine", thresholds.cosine_threshold}, {"bert", thresholds.bert_threshold}};
    j["keyframe"] = {{"min_diff", keyframe.min_diff},
                     {"min_brightness", keyframe.min_brightness},
                     {"max_brightness", keyframe.max_brightness},
                     {"min_entropy", keyframe.min_entropy}};
    j["evaluate"] = {{"split", evaluate.split}, {"samples_per_class", evaluate.samples_per_class}};
    j["decode_command"] = decode_command;
    ordered_json providers;
    providers["caption"] = detail::provider_json(caption_provider);
    providers["judge"] = detail::provider_json(judge_provider);
    ordered_json cands = ordered_json::object();
    for (const auto& [name, p] : candidates) cands[name] = detail::provider_json(p);
    providers["candidates"] = std::move(cands);
    providers["embedder"] = detail::provider_json(embedder);
    providers["token_embedder"] = detail::provider_json(token_embedder);
    j["providers"] = std::move(providers);
    return j;
}

/// Caption and candidate prompt texts. Files in the templates directory
/// override the built-in defaults one by one.
struct TemplateSet {
    PromptTemplate caption = PromptTemplate::defaults();
    std::string candidate_text = "Describe the activity the person is performing, in one sentence.";
};

inline TemplateSet load_templates(const std::optional<fs::path>& dir) {
    TemplateSet t;
    if (!dir) return t;
    auto maybe = [&](const char* name, std::string& out) {
        auto p = *dir / name;
        std::error_code ec;
        if (fs::exists(p, ec)) {
            auto text = read_file(p);
            while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
            out = std::move(text);
        }
    };
    maybe("caption_system.txt", t.caption.system_text);
    maybe("caption_initial.txt", t.caption.initial_user_text);
    maybe("caption_refine.txt", t.caption.refine_user_text);
    maybe("candidate.txt", t.candidate_text);
    t.caption.validate();
    return t;
}

}  // namespace harcap
