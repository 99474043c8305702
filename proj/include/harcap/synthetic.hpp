#pragma once

// Synthetic fixtures: textured frame sequences and a small self-contained
// demo dataset (manifest, lexicon, frames, config) for offline runs.

#include <harcap/dataset.hpp>
#include <harcap/image_io.hpp>
#include <harcap/keyframe.hpp>
#include <harcap/rng.hpp>

#include <vector>

namespace harcap::synthetic {

/// Frame around `base` intensity with independent per-pixel noise of
/// +-`amplitude`. Distinct (seed, salt) pairs give distinct textures.
inline Frame textured_frame(std::size_t index, int width, int height, int base, int amplitude,
                            std::uint64_t seed, std::uint64_t salt = 0) {
    const CounterRng rng = CounterRng(seed).split(salt * 1000003ULL + index);
    std::vector<std::uint8_t> px(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    for (std::size_t i = 0; i < px.size(); ++i) {
        int noise = static_cast<int>(rng.below(i, static_cast<std::uint64_t>(2 * amplitude + 1))) - amplitude;
        px[i] = static_cast<std::uint8_t>(std::clamp(base + noise, 0, 255));
    }
    return Frame(index, width, height, std::move(px));
}

inline Frame constant_frame(std::size_t index, int width, int height, std::uint8_t value) {
    return Frame(index, width, height,
                 std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, value));
}

/// `n` frames; the first half sits near `dark`, the rest near `bright`.
inline std::vector<Frame> two_scene_sequence(std::size_t n, std::uint64_t seed, int dark = 60,
                                             int bright = 180, int width = 32, int height = 24) {
    std::vector<Frame> frames;
    for (std::size_t i = 0; i < n; ++i) {
        frames.push_back(textured_frame(i, width, height, i < n / 2 ? dark : bright, 20, seed));
    }
    return frames;
}

/// Reference Cook_Cleanup keyword list, verbatim (note the repeated "wipe").
inline const std::vector<std::string>& cook_cleanup_keywords() {
    static const std::vector<std::string> k{
        "cook", "organize", "wipe",  "dish",  "dishwasher", "load",     "clean",    "area",  "counter",
        "table", "stove",   "tidy",  "kitchen", "scrub",   "wipe",     "disinfect", "spotless", "neat"};
    return k;
}

inline KeywordLexicon demo_lexicon() {
    KeywordLexicon lex;
    lex.entries["Cook_Cleanup"] = cook_cleanup_keywords();
    lex.entries["Drink_Frombottle"] = {"drink", "bottle", "sip", "water", "thirst"};
    lex.entries["Eat_Snack"] = {"eat", "snack", "chew", "bite", "food"};
    lex.entries["Readbook"] = {"read", "book", "page", "novel", "turn"};
    lex.entries["Sitdown"] = {"sit", "chair", "seat", "couch", "lower"};
    lex.entries["Usetelephone"] = {"phone", "telephone", "call", "talk", "dial"};
    return lex;
}

struct DemoOptions {
    std::size_t frames_per_video = 8;
    int width = 32;
    int height = 24;
    std::uint64_t seed = 7;
    bool png = false;
};

/// 18 subjects (11 cross-subject training ids + 7 others); cameras 1..3.
/// Every label appears on cameras 1 and 2 except Usetelephone (cameras 1 and
/// 3), so the cross-view restriction drops one class.
inline std::vector<VideoRecord> demo_records() {
    const std::vector<int> subjects{3, 4, 6, 7, 9, 12, 13, 15, 17, 19, 25, 2, 5, 8, 10, 11, 14, 16};
    const auto lex = demo_lexicon();
    std::vector<VideoRecord> recs;
    std::size_t n = 0;
    for (const auto& [label, _] : lex.entries) {
        for (std::size_t v = 0; v < 6; ++v, ++n) {
            VideoRecord r;
            r.subject_id = subjects[(n * 5) % subjects.size()];
            r.camera_id = label == "Usetelephone" ? (v % 2 ? 1 : 3) : static_cast<int>(v % 3) + 1;
            r.label = label;
            char id[96];
            std::snprintf(id, sizeof id, "%s_p%02d_v%02zu_c%02d", label.c_str(), r.subject_id, v,
                          r.camera_id);
            r.video_id = id;
            r.frames_uri = "frames/" + r.video_id;
            recs.push_back(std::move(r));
        }
    }
    return recs;
}

/// Writes manifest.csv, lexicon.json, frames/<video_id>/NNNN.{pgm,png},
/// templates/ and config.json under `dir`.
inline void write_demo_dataset(const fs::path& dir, const DemoOptions& opt = {}) {
    fs::create_directories(dir);
    auto recs = demo_records();
    const auto lex = demo_lexicon();
    for (std::size_t vi = 0; vi < recs.size(); ++vi) {
        const auto& r = recs[vi];
        const auto h = fnv1a64(r.label);
        const int dark = 40 + static_cast<int>(h % 50);
        const int bright = 150 + static_cast<int>((h >> 8) % 60);
        auto frames_dir = dir / r.frames_uri;
        fs::create_directories(frames_dir);
        for (std::size_t i = 0; i < opt.frames_per_video; ++i) {
            int base = i < opt.frames_per_video / 2 ? dark : bright;
            auto f = textured_frame(i, opt.width, opt.height, base, 20, opt.seed, vi + 1);
            char name[32];
            std::snprintf(name, sizeof name, "%04zu.%s", i, opt.png ? "png" : "pgm");
            if (opt.png) {
                std::vector<std::uint8_t> rgb;
                for (auto p : f.pixels) rgb.insert(rgb.end(), {p, p, p});
                write_file_atomic(frames_dir / name, encode_png_rgb(f.width, f.height, rgb));
            } else {
                write_file_atomic(frames_dir / name, encode_pgm(f));
            }
        }
    }
    write_file_atomic(dir / "manifest.csv", format_manifest_csv(recs));
    save_lexicon(lex, dir / "lexicon.json");

    fs::create_directories(dir / "templates");
    write_file_atomic(dir / "templates" / "candidate.txt",
                      "Describe the activity the person is performing, in one sentence.\n");

    ordered_json cfg;
    cfg["manifest"] = "manifest.csv";
    cfg["lexicon"] = "lexicon.json";
    cfg["templates"] = "templates";
    cfg["out_dir"] = "out";
    cfg["cache_dir"] = "cache";
    cfg["seed"] = 0;
    cfg["parallelism"] = 4;
    cfg["frames_per_prompt"] = 2;
    cfg["max_attempts"] = 5;
    cfg["metrics"] = {"keywords", "cosine", "bert_precision", "vlm_judge"};
    cfg["thresholds"] = {{"cosine", 0.5}, {"bert", 0.9}};
    cfg["evaluate"] = {{"split", "CS"}, {"samples_per_class", 10}};
    ordered_json providers;
    providers["caption"] = {{"kind", "mock"}, {"model_id", "mock-captioner"}};
    providers["judge"] = {{"kind", "mock"}, {"model_id", "mock-judge"}};
    providers["candidates"] = {{"mock-vlm-a", {{"kind", "mock"}}}, {"mock-vlm-b", {{"kind", "mock"}}}};
    providers["embedder"] = {{"kind", "mock"}, {"model_id", "mock-hash-384"}, {"dimension", 384}};
    providers["token_embedder"] = {{"kind", "mock"}, {"model_id", "mock-hash-384"}, {"dimension", 384}};
    cfg["providers"] = std::move(providers);
    write_file_atomic(dir / "config.json", cfg.dump(2) + "\n");
}

}  // namespace harcap::synthetic
