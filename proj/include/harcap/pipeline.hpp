#pragma once

// Batch commands: keyframes, build-captions, evaluate, split, report.
// Per-video work runs on a bounded worker pool; every artifact is sorted
// before it is written, so scheduling never changes file contents.

#include <harcap/cache.hpp>
#include <harcap/captiongen.hpp>
#include <harcap/config.hpp>
#include <harcap/http_providers.hpp>
#include <harcap/image_io.hpp>
#include <harcap/keyframe.hpp>
#include <harcap/metrics.hpp>
#include <harcap/protocol.hpp>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

namespace harcap {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitCoverage = 3,
    kExitProvider = 4,
};

/// Runs fn(i) for i in [0, n) on up to `workers` threads. The first
/// exception stops the pool and is rethrown.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr first;
    std::mutex mu;
    auto body = [&] {
        while (!stop.load()) {
            auto i = next++;
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!first) first = std::current_exception();
                stop = true;
            }
        }
    };
    if (workers == 1) {
        body();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
    }
    if (first) std::rethrow_exception(first);
}

/// Filesystem-safe rendering of a video id.
inline std::string safe_name(std::string_view id) {
    std::string out;
    for (unsigned char c : id) {
        out.push_back(std::isalnum(c) || c == '-' || c == '_' || c == '.' ? static_cast<char>(c) : '_');
    }
    if (out.empty() || out == "." || out == "..") out = "_" + out;
    return out;
}

// ---------------------------------------------------------------------------
// Providers

struct ProviderSet {
    std::shared_ptr<ChatProvider> caption;
    ChatParams caption_params;
    std::shared_ptr<ChatProvider> judge;
    ChatParams judge_params;
    std::map<std::string, std::pair<std::shared_ptr<ChatProvider>, ChatParams>> candidates;
    std::shared_ptr<TextEmbedder> embedder;
    std::shared_ptr<TokenEmbedder> token_embedder;

    /// Backend requests across all providers (cache hits excluded).
    std::size_t backend_calls() const {
        std::size_t n = 0;
        std::set<const void*> seen;
        auto add = [&](const void* p, std::size_t c) {
            if (p && seen.insert(p).second) n += c;
        };
        if (caption) add(caption.get(), caption->backend_calls());
        if (judge) add(judge.get(), judge->backend_calls());
        for (const auto& [_, c] : candidates) add(c.first.get(), c.first->backend_calls());
        if (embedder) add(embedder.get(), embedder->backend_calls());
        if (token_embedder) add(token_embedder.get(), token_embedder->backend_calls());
        return n;
    }
};

namespace detail {

inline std::shared_ptr<ChatProvider> make_chat(const ProviderConfig& p, const KeywordLexicon& lex) {
    if (p.kind == "mock") {
        FixtureChatOptions o;
        o.miss_first = p.mock_miss_first;
        o.refine_marker = p.mock_refine_marker;
        o.off_topic_labels = p.mock_off_topic_labels;
        o.latency = std::chrono::milliseconds(p.mock_latency_ms);
        return std::make_shared<FixtureChat>(lex, o);
    }
    return std::make_shared<HttpChat>(
        Endpoint{p.base_url, api_key_from_env(), std::chrono::milliseconds(p.timeout_ms)},
        RetryPolicy{p.retry_attempts, std::chrono::milliseconds(p.retry_delay_ms)}, p.max_in_flight);
}

}  // namespace detail

/// Providers described by the config, each behind the shared response cache.
inline ProviderSet make_providers(const RunConfig& cfg, const KeywordLexicon& lexicon) {
    auto cache = std::make_shared<const ResponseCache>(cfg.cache_dir);
    ProviderSet ps;
    ps.caption = std::make_shared<CachingChat>(detail::make_chat(cfg.caption_provider, lexicon), cache);
    ps.caption_params = cfg.caption_provider.chat_params();
    ps.judge = std::make_shared<CachingChat>(detail::make_chat(cfg.judge_provider, lexicon), cache);
    ps.judge_params = cfg.judge_provider.chat_params();
    for (const auto& [name, p] : cfg.candidates) {
        ps.candidates[name] = {
            std::make_shared<CachingChat>(detail::make_chat(p, lexicon), cache), p.chat_params()};
    }
    auto endpoint = [](const ProviderConfig& p) {
        return Endpoint{p.base_url, api_key_from_env(), std::chrono::milliseconds(p.timeout_ms)};
    };
    auto retry = [](const ProviderConfig& p) {
        return RetryPolicy{p.retry_attempts, std::chrono::milliseconds(p.retry_delay_ms)};
    };
    std::shared_ptr<TextEmbedder> text;
    if (cfg.embedder.kind == "mock") {
        text = std::make_shared<HashEmbedder>(cfg.embedder.dimension, cfg.embedder.model_id);
    } else {
        text = std::make_shared<HttpEmbedder>(endpoint(cfg.embedder), cfg.embedder.model_id,
                                              retry(cfg.embedder), cfg.embedder.max_in_flight);
    }
    ps.embedder = std::make_shared<CachingTextEmbedder>(text, cache);
    std::shared_ptr<TokenEmbedder> tok;
    if (cfg.token_embedder.kind == "mock") {
        tok = std::make_shared<HashEmbedder>(cfg.token_embedder.dimension, cfg.token_embedder.model_id);
    } else {
        tok = std::make_shared<HttpTokenEmbedder>(endpoint(cfg.token_embedder),
                                                  cfg.token_embedder.model_id,
                                                  retry(cfg.token_embedder),
                                                  cfg.token_embedder.max_in_flight);
    }
    ps.token_embedder = std::make_shared<CachingTokenEmbedder>(tok, cache);
    return ps;
}

// ---------------------------------------------------------------------------
// Keyframes

struct KeyframeSummary {
    std::size_t computed = 0;
    std::size_t skipped = 0;
    std::map<std::string, std::string> failures;  // video_id -> error
};

namespace detail {

inline fs::path keyframe_dir(const RunConfig& cfg) { return cfg.out_dir / "keyframes"; }

inline ordered_json keyframe_settings(const RunConfig& cfg) {
    return {{"k", cfg.frames_per_prompt},
            {"min_diff", cfg.keyframe.min_diff},
            {"min_brightness", cfg.keyframe.min_brightness},
            {"max_brightness", cfg.keyframe.max_brightness},
            {"min_entropy", cfg.keyframe.min_entropy},
            {"seed", cfg.keyframe.seed}};
}

/// Index files written under different settings are stale; returns true
/// when existing index files may be reused.
inline bool keyframe_settings_match(const RunConfig& cfg) {
    auto p = keyframe_dir(cfg) / "settings.json";
    auto want = keyframe_settings(cfg).dump(2) + "\n";
    std::error_code ec;
    if (fs::exists(p, ec) && read_file(p) == want) return true;
    write_file_atomic(p, want);
    return false;
}

inline fs::path frames_dir_for(const RunConfig& cfg, const VideoRecord& rec) {
    fs::path src = detail::resolve(cfg.manifest.parent_path(), rec.frames_uri);
    std::error_code ec;
    if (fs::is_directory(src, ec)) return src;
    if (fs::is_regular_file(src, ec) && !cfg.decode_command.empty()) {
        auto dest = cfg.out_dir / "frames" / safe_name(rec.video_id);
        if (!fs::is_directory(dest, ec) || fs::is_empty(dest, ec)) {
            fs::create_directories(dest);
            auto cmd = replace_all(replace_all(cfg.decode_command, "{video}", src.string()),
                                   "{frames_dir}", dest.string());
            if (std::system(cmd.c_str()) != 0) throw IoError("decode command failed: " + cmd);
        }
        return dest;
    }
    throw IoError("frames source not found: " + src.string());
}

inline fs::path index_path(const RunConfig& cfg, const VideoRecord& rec) {
    return keyframe_dir(cfg) / (safe_name(rec.video_id) + ".txt");
}

}  // namespace detail

/// Selected keyframe files for one video, computing and persisting the
/// index file when it is missing. Returns whether work was done.
inline std::pair<std::vector<fs::path>, bool> ensure_keyframes(const RunConfig& cfg,
                                                               const VideoRecord& rec,
                                                               bool reuse = true) {
    auto dir = detail::frames_dir_for(cfg, rec);
    auto idx = detail::index_path(cfg, rec);
    std::error_code ec;
    if (reuse && fs::exists(idx, ec)) {
        std::vector<fs::path> files;
        for (const auto& line : split_lines(read_file(idx))) {
            if (!trim(line).empty()) files.push_back(dir / std::string(trim(line)));
        }
        if (!files.empty()) return {files, false};
    }
    auto files = list_frame_files(dir);
    if (files.empty()) throw IoError("no frames in " + dir.string());
    auto frames = load_frames(files);
    auto picks = select_keyframes(frames, cfg.frames_per_prompt, cfg.keyframe);
    std::string out;
    std::vector<fs::path> selected;
    for (auto i : picks) {
        out += files[i].filename().string() + "\n";
        selected.push_back(files[i]);
    }
    write_file_atomic(idx, out);
    return {selected, true};
}

inline std::vector<ImagePayload> load_keyframe_images(std::span<const fs::path> files) {
    std::vector<ImagePayload> out;
    for (const auto& f : files) {
        out.push_back({read_file(f), std::string(detail::media_type_for(f))});
    }
    return out;
}

inline KeyframeSummary cmd_keyframes(const RunConfig& cfg) {
    auto manifest = load_manifest(cfg.manifest);
    const bool reuse = detail::keyframe_settings_match(cfg);
    KeyframeSummary s;
    std::mutex mu;
    parallel_for(manifest.records.size(), cfg.parallelism, [&](std::size_t i) {
        const auto& rec = manifest.records[i];
        try {
            auto [_, computed] = ensure_keyframes(cfg, rec, reuse);
            std::lock_guard lock(mu);
            ++(computed ? s.computed : s.skipped);
        } catch (const std::exception& e) {
            std::lock_guard lock(mu);
            s.failures[rec.video_id] = e.what();
        }
    });
    ordered_json rep;
    rep["computed"] = s.computed;
    rep["skipped"] = s.skipped;
    rep["failures"] = s.failures;
    write_file_atomic(detail::keyframe_dir(cfg) / "summary.json", rep.dump(2) + "\n");
    return s;
}

// ---------------------------------------------------------------------------
// Caption building

struct BuildSummary {
    CoverageReport coverage;
    std::size_t generated = 0;
    std::size_t reused = 0;
    std::map<std::string, std::string> failures;  // provider / io failures
    bool provider_exhausted = false;

    int exit_code() const {
        if (provider_exhausted) return kExitProvider;
        if (!failures.empty() || coverage.coverage_fraction < 1.0) return kExitCoverage;
        return kExitOk;
    }
};

namespace detail {

inline fs::path checkpoint_path(const RunConfig& cfg, const std::string& video_id) {
    return cfg.out_dir / "captions.d" / (safe_name(video_id) + ".json");
}

}  // namespace detail

inline BuildSummary cmd_build_captions(const RunConfig& cfg, ProviderSet& providers) {
    auto manifest = load_manifest(cfg.manifest);
    auto lexicon = load_lexicon(cfg.lexicon);
    auto templates = load_templates(cfg.templates);
    const bool reuse_keyframes = detail::keyframe_settings_match(cfg);

    CaptionGenConfig gen;
    gen.max_attempts = cfg.max_attempts;
    gen.max_images = cfg.max_frames_per_prompt;
    gen.chat = providers.caption_params;

    BuildSummary s;
    std::mutex mu;
    std::vector<std::optional<GenerationResult>> results(manifest.records.size());
    parallel_for(manifest.records.size(), cfg.parallelism, [&](std::size_t i) {
        const auto& rec = manifest.records[i];
        auto ckpt = detail::checkpoint_path(cfg, rec.video_id);
        std::error_code ec;
        if (fs::exists(ckpt, ec)) {
            auto j = json::parse(read_file(ckpt));
            GenerationResult r{caption_from_json(j.at("record")), trace_from_json(j.at("trace"))};
            if (r.record.status == CaptionStatus::verified && r.record.label == rec.label) {
                results[i] = std::move(r);
                std::lock_guard lock(mu);
                ++s.reused;
                return;
            }
        }
        try {
            if (!lexicon.contains(rec.label)) {
                throw MissingLexiconEntry("no lexicon entry for label '" + rec.label + "'");
            }
            auto files = ensure_keyframes(cfg, rec, reuse_keyframes).first;
            auto images = load_keyframe_images(files);
            auto r = generate_caption(rec, lexicon, images, *providers.caption, templates.caption, gen);
            ordered_json j;
            j["record"] = to_json(r.record);
            j["trace"] = to_json(r.trace);
            write_file_atomic(ckpt, j.dump() + "\n");
            results[i] = std::move(r);
            std::lock_guard lock(mu);
            ++s.generated;
        } catch (const Error& e) {
            std::lock_guard lock(mu);
            s.failures[rec.video_id] = e.kind() + ": " + e.what();
            if (dynamic_cast<const TransportError*>(&e)) s.provider_exhausted = true;
        }
    });

    std::vector<CaptionRecord> records;
    std::vector<GenerationTrace> traces;
    for (auto& r : results) {
        if (!r) continue;
        records.push_back(r->record);
        traces.push_back(r->trace);
    }
    auto by_id = [](const auto& a, const auto& b) { return a.video_id < b.video_id; };
    std::sort(records.begin(), records.end(), by_id);
    std::sort(traces.begin(), traces.end(), by_id);

    s.coverage = verify_dataset(records, lexicon);
    for (const auto& [id, _] : s.failures) s.coverage.offending_ids.push_back(id);
    std::sort(s.coverage.offending_ids.begin(), s.coverage.offending_ids.end());
    s.coverage.total += s.failures.size();
    if (s.coverage.total > 0) {
        s.coverage.empty = false;
        s.coverage.coverage_fraction =
            static_cast<double>(s.coverage.verified) / static_cast<double>(s.coverage.total);
    }

    save_captions(records, cfg.out_dir / "captions.jsonl");
    std::string trace_text;
    for (const auto& t : traces) trace_text += to_json(t).dump() + "\n";
    write_file_atomic(cfg.out_dir / "traces.jsonl", trace_text);
    auto cov = to_json(s.coverage);
    cov["failures"] = s.failures;
    write_file_atomic(cfg.out_dir / "coverage.json", cov.dump(2) + "\n");
    return s;
}

// ---------------------------------------------------------------------------
// Evaluation

struct VerdictRow {
    std::string video_id;
    MetricVerdict verdict;
    std::string model_id;
};

inline ordered_json to_json(const VerdictRow& r) {
    ordered_json j;
    j["video_id"] = r.video_id;
    j["metric"] = std::string(to_string(r.verdict.metric));
    j["correct"] = r.verdict.correct;
    j["score"] = r.verdict.score ? json(*r.verdict.score) : json(nullptr);
    j["threshold"] = r.verdict.threshold ? json(*r.verdict.threshold) : json(nullptr);
    j["detail"] = r.verdict.detail;
    j["model_id"] = r.model_id;
    return j;
}

inline VerdictRow verdict_from_json(const json& j) {
    VerdictRow r;
    try {
        r.video_id = j.at("video_id").get<std::string>();
        auto m = metric_from_string(j.at("metric").get<std::string>());
        if (!m) throw ParseError("unknown metric in verdict row");
        r.verdict.metric = *m;
        r.verdict.correct = j.at("correct").get<bool>();
        if (!j.at("score").is_null()) r.verdict.score = j.at("score").get<double>();
        if (!j.at("threshold").is_null()) r.verdict.threshold = j.at("threshold").get<double>();
        r.verdict.detail = j.at("detail").get<std::string>();
        r.model_id = j.at("model_id").get<std::string>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("verdict row: ") + e.what());
    }
    return r;
}

inline std::vector<VerdictRow> load_verdicts(const fs::path& path) {
    std::vector<VerdictRow> rows;
    for (const auto& line : split_lines(read_file(path))) {
        if (trim(line).empty()) continue;
        try {
            rows.push_back(verdict_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw ParseError(path.string() + ": " + e.what());
        }
    }
    return rows;
}

struct EvaluateSummary {
    std::string split_name;
    std::size_t test_records = 0;
    std::map<Metric, std::size_t> verdicts;
    std::map<Metric, std::size_t> failures;
    std::map<Metric, MCAReport> mca;
    std::vector<std::string> flags;
    bool provider_exhausted = false;

    int exit_code() const { return provider_exhausted ? kExitProvider : kExitOk; }
};

/// Test records selected by `evaluate.split`, plus the directory name the
/// verdicts are filed under. CV1 and CV2 share the camera-2 test set.
inline std::pair<std::string, SplitResult> evaluation_records(const RunConfig& cfg,
                                                              const Manifest& manifest) {
    const auto& name = cfg.evaluate.split;
    if (name == "CS") return {"CS", split_cs(manifest)};
    if (name == "CV" || name == "CV1" || name == "CV2") return {"CV", split_cv(manifest, Protocol::CV1)};
    SplitResult r;
    if (name == "phase1") {
        auto sample = sample_per_class(manifest, cfg.evaluate.samples_per_class, cfg.seed);
        r.test = std::move(sample.records);
        r.flags = std::move(sample.flags);
        return {"phase1", r};
    }
    r.test = manifest.records;
    return {"all", r};
}

inline EvaluateSummary cmd_evaluate(const RunConfig& cfg, ProviderSet& providers,
                                    const std::string& candidate) {
    if (!providers.candidates.count(candidate)) {
        throw ConfigError("unknown candidate model '" + candidate + "'");
    }
    for (auto m : cfg.metrics) {
        if (m == Metric::vlm_judge && !providers.judge) throw ConfigError("vlm_judge needs a judge provider");
    }
    auto manifest = load_manifest(cfg.manifest);
    auto lexicon = load_lexicon(cfg.lexicon);
    auto templates = load_templates(cfg.templates);
    const bool reuse_keyframes = detail::keyframe_settings_match(cfg);

    auto caps_path = cfg.out_dir / "captions.jsonl";
    std::error_code ec;
    if (!fs::exists(caps_path, ec)) {
        throw MissingArtifacts("ground-truth captions not found: " + caps_path.string());
    }
    std::map<std::string, CaptionRecord> truth;
    for (auto& c : load_captions(caps_path)) {
        if (c.status == CaptionStatus::verified) truth.emplace(c.video_id, std::move(c));
    }

    auto [split_name, split] = evaluation_records(cfg, manifest);
    auto test = split.test;
    std::sort(test.begin(), test.end(),
              [](const auto& a, const auto& b) { return a.video_id < b.video_id; });

    auto& [chat, params] = providers.candidates.at(candidate);
    const auto start = std::chrono::steady_clock::now();

    struct SampleOut {
        std::string generated;
        std::vector<MetricVerdict> verdicts;
        bool exhausted = false;
    };
    std::vector<SampleOut> outs(test.size());

    parallel_for(test.size(), cfg.parallelism, [&](std::size_t i) {
        const auto& rec = test[i];
        auto& out = outs[i];
        auto fail_all = [&](const std::string& why) {
            out.verdicts.clear();
            for (auto m : cfg.metrics) out.verdicts.push_back({m, false, std::nullopt, std::nullopt, why});
        };
        std::vector<ImagePayload> images;
        try {
            images = load_keyframe_images(ensure_keyframes(cfg, rec, reuse_keyframes).first);
            ChatMessage user{Role::user, {}};
            for (const auto& img : images) user.parts.emplace_back(img);
            user.parts.emplace_back(templates.candidate_text);
            const std::vector<ChatMessage> msgs{user};
            out.generated = chat->chat_complete(msgs, params);
        } catch (const Error& e) {
            out.exhausted = dynamic_cast<const TransportError*>(&e) != nullptr;
            fail_all("error: " + e.kind() + ": " + e.what());
            return;
        }
        auto gt = truth.find(rec.video_id);
        for (auto m : cfg.metrics) {
            try {
                if (m == Metric::keywords) {
                    out.verdicts.push_back(eval_keywords(out.generated, rec.label, lexicon));
                    continue;
                }
                if (gt == truth.end()) {
                    out.verdicts.push_back({m, false, std::nullopt, std::nullopt, "error: no ground truth"});
                    continue;
                }
                const auto& ref = gt->second.caption;
                switch (m) {
                    case Metric::cosine:
                        out.verdicts.push_back(eval_cosine(ref, out.generated, *providers.embedder, cfg.thresholds));
                        break;
                    case Metric::bert_precision:
                        out.verdicts.push_back(eval_bert(ref, out.generated, *providers.token_embedder, cfg.thresholds));
                        break;
                    case Metric::vlm_judge:
                        out.verdicts.push_back(eval_judge(ref, out.generated, *providers.judge, images,
                                                          providers.judge_params));
                        break;
                    default: break;
                }
            } catch (const Error& e) {
                if (dynamic_cast<const TransportError*>(&e)) out.exhausted = true;
                out.verdicts.push_back({m, false, std::nullopt, std::nullopt,
                                        "error: " + e.kind() + ": " + e.what()});
            }
        }
    });

    EvaluateSummary s;
    s.split_name = split_name;
    s.test_records = test.size();
    s.flags = split.flags;
    auto dir = cfg.out_dir / "verdicts" / safe_name(candidate) / split_name;

    std::string gens;
    for (std::size_t i = 0; i < test.size(); ++i) {
        ordered_json g;
        g["video_id"] = test[i].video_id;
        g["label"] = test[i].label;
        g["caption"] = outs[i].generated;
        gens += g.dump() + "\n";
        s.provider_exhausted = s.provider_exhausted || outs[i].exhausted;
    }
    write_file_atomic(dir / "generations.jsonl", gens);

    ordered_json mca_json = ordered_json::object();
    ordered_json counts = ordered_json::object();
    for (std::size_t mi = 0; mi < cfg.metrics.size(); ++mi) {
        auto m = cfg.metrics[mi];
        std::string rows;
        std::vector<LabeledVerdict> labeled;
        for (std::size_t i = 0; i < test.size(); ++i) {
            const auto& v = outs[i].verdicts.at(mi);
            rows += to_json(VerdictRow{test[i].video_id, v, candidate}).dump() + "\n";
            labeled.push_back({test[i].video_id, test[i].label, v.correct});
            ++s.verdicts[m];
            if (v.detail.rfind("error: ", 0) == 0) ++s.failures[m];
        }
        write_file_atomic(dir / (std::string(to_string(m)) + ".jsonl"), rows);
        s.mca[m] = mca(labeled);
        mca_json[std::string(to_string(m))] = to_json(s.mca[m]);
        counts[std::string(to_string(m))] = {{"verdicts", s.verdicts[m]}, {"failures", s.failures[m]}};
    }

    ordered_json run;
    auto snapshot = cfg.snapshot();
    run["run_id"] = Sha256Builder().field(snapshot.dump()).field(candidate).field(split_name).hex().substr(0, 16);
    run["candidate"] = candidate;
    run["split"] = split_name;
    run["test_records"] = test.size();
    run["counts"] = std::move(counts);
    run["mca"] = std::move(mca_json);
    run["flags"] = s.flags;
    run["config"] = std::move(snapshot);
    write_file_atomic(dir / "run.json", run.dump(2) + "\n");

    auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ordered_json timing{{"wall_seconds", elapsed}, {"backend_calls", providers.backend_calls()}};
    write_file_atomic(dir / "timing.json", timing.dump(2) + "\n");
    return s;
}

// ---------------------------------------------------------------------------
// Splits

inline SplitResult cmd_split(const RunConfig& cfg, Protocol protocol) {
    auto manifest = load_manifest(cfg.manifest);
    auto r = split(manifest, protocol);
    std::vector<VideoRecord> rows;
    std::vector<std::vector<std::string>> extra;
    for (const auto& rec : r.train) {
        rows.push_back(rec);
        extra.push_back({"train"});
    }
    for (const auto& rec : r.test) {
        rows.push_back(rec);
        extra.push_back({"test"});
    }
    auto dir = cfg.out_dir / "splits";
    auto name = std::string(to_string(protocol));
    write_file_atomic(dir / (name + ".csv"), format_manifest_csv(rows, {"split"}, extra));
    if (protocol != Protocol::CS) {
        std::string labels;
        for (const auto& l : r.restricted_taxonomy) labels += l + "\n";
        write_file_atomic(dir / (name + "_taxonomy.txt"), labels);
    }
    ordered_json flags = r.flags;
    write_file_atomic(dir / (name + "_flags.json"), flags.dump(2) + "\n");
    return r;
}

// ---------------------------------------------------------------------------
// Report

struct ReportCell {
    MCAReport report;
    std::size_t verdicts = 0;
};

struct ReportTable {
    // (model, metric) -> split column -> cell
    std::map<std::pair<std::string, std::string>, std::map<std::string, ReportCell>> rows;
    std::vector<std::string> columns;
    std::vector<std::string> flags;
};

inline std::vector<std::string> report_columns(const std::set<std::string>& splits) {
    std::vector<std::string> cols{"CS", "CV1", "CV2"};
    for (const auto& s : splits) {
        if (s != "CS" && s != "CV") cols.push_back(s);
    }
    return cols;
}

inline ReportTable build_report(const RunConfig& cfg) {
    auto manifest = load_manifest(cfg.manifest);
    std::map<std::string, ActivityLabel> label_of;
    for (const auto& r : manifest.records) label_of[r.video_id] = r.label;

    ReportTable t;
    std::set<std::string> splits;
    auto root = cfg.out_dir / "verdicts";
    std::error_code ec;
    if (fs::is_directory(root, ec)) {
        for (const auto& model_dir : fs::directory_iterator(root)) {
            if (!model_dir.is_directory()) continue;
            for (const auto& split_dir : fs::directory_iterator(model_dir.path())) {
                if (!split_dir.is_directory()) continue;
                for (const auto& f : fs::directory_iterator(split_dir.path())) {
                    auto metric = f.path().stem().string();
                    if (f.path().extension() != ".jsonl" || !metric_from_string(metric)) continue;
                    auto rows = load_verdicts(f.path());
                    if (rows.empty()) continue;
                    std::vector<LabeledVerdict> labeled;
                    std::string model = rows.front().model_id;
                    for (const auto& r : rows) {
                        auto it = label_of.find(r.video_id);
                        if (it == label_of.end()) {
                            t.flags.push_back("verdict for unknown video " + r.video_id);
                            continue;
                        }
                        labeled.push_back({r.video_id, it->second, r.verdict.correct});
                    }
                    auto split = split_dir.path().filename().string();
                    splits.insert(split);
                    ReportCell cell{mca(labeled), labeled.size()};
                    auto& row = t.rows[{model, metric}];
                    if (split == "CV") {
                        row["CV1"] = cell;
                        row["CV2"] = cell;
                    } else {
                        row[split] = cell;
                    }
                }
            }
        }
    }
    if (t.rows.empty()) throw MissingArtifacts("no verdict files under " + root.string());
    std::sort(t.flags.begin(), t.flags.end());
    t.columns = report_columns(splits);
    if (splits.count("CV")) t.flags.push_back("CV1 and CV2 share the camera-2 test set; columns are equal");
    return t;
}

inline std::string format_percent(double v) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(1) << 100.0 * v;
    return ss.str();
}

inline std::string format_report_text(const ReportTable& t) {
    std::vector<std::vector<std::string>> grid;
    std::vector<std::string> header{"Model", "Eval Method"};
    header.insert(header.end(), t.columns.begin(), t.columns.end());
    grid.push_back(header);
    for (const auto& [key, cells] : t.rows) {
        std::vector<std::string> line{key.first, key.second};
        for (const auto& c : t.columns) {
            auto it = cells.find(c);
            line.push_back(it == cells.end() ? "-" : format_percent(it->second.report.mca));
        }
        grid.push_back(std::move(line));
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& line : grid) {
        for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
    }
    std::ostringstream out;
    auto emit = [&](const std::vector<std::string>& line) {
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (i) out << "  ";
            if (i < 2) out << std::left << std::setw(static_cast<int>(width[i])) << line[i];
            else out << std::right << std::setw(static_cast<int>(width[i])) << line[i];
        }
        out << "\n";
    };
    emit(grid[0]);
    std::size_t total = 0;
    for (auto w : width) total += w;
    out << std::string(total + 2 * (width.size() - 1), '-') << "\n";
    for (std::size_t i = 1; i < grid.size(); ++i) emit(grid[i]);

    out << "\nPer-class accuracy (%)\n";
    for (const auto& [key, cells] : t.rows) {
        for (const auto& c : t.columns) {
            auto it = cells.find(c);
            if (it == cells.end()) continue;
            out << "\n[" << key.first << " / " << key.second << " / " << c << "]  MCA "
                << format_percent(it->second.report.mca) << "\n";
            for (const auto& [label, tally] : it->second.report.per_class) {
                out << "  " << std::left << std::setw(28) << label << std::right << std::setw(6)
                    << format_percent(tally.accuracy()) << "  (" << tally.correct << "/"
                    << tally.total << ")\n";
            }
        }
    }
    if (!t.flags.empty()) {
        out << "\nNotes\n";
        for (const auto& f : t.flags) out << "  - " << f << "\n";
    }
    return out.str();
}

inline ordered_json to_json(const ReportTable& t) {
    ordered_json rows = ordered_json::array();
    for (const auto& [key, cells] : t.rows) {
        ordered_json r;
        r["model"] = key.first;
        r["metric"] = key.second;
        ordered_json cols = ordered_json::object();
        for (const auto& c : t.columns) {
            auto it = cells.find(c);
            if (it == cells.end()) continue;
            auto j = to_json(it->second.report);
            j["verdicts"] = it->second.verdicts;
            cols[c] = std::move(j);
        }
        r["columns"] = std::move(cols);
        rows.push_back(std::move(r));
    }
    ordered_json j;
    j["columns"] = t.columns;
    j["rows"] = std::move(rows);
    j["flags"] = t.flags;
    return j;
}

inline ReportTable cmd_report(const RunConfig& cfg) {
    auto t = build_report(cfg);
    write_file_atomic(cfg.out_dir / "report.json", to_json(t).dump(2) + "\n");
    write_file_atomic(cfg.out_dir / "report.txt", format_report_text(t));
    return t;
}

}  // namespace harcap
