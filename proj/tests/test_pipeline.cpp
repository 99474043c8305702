#include <gtest/gtest.h>

#include <thread>

#include "oracles.hpp"
#include "pipeline_fixture.hpp"
#include "support.hpp"

using namespace harcap;
using namespace testing_support;

namespace {

/// Demo dataset in a scratch directory with the config loaded.
struct Demo {
    TempDir dir{"demo"};
    fs::path config = dir / "config.json";

    explicit Demo(const synthetic::DemoOptions& opt = {}) { synthetic::write_demo_dataset(dir.path(), opt); }

    RunConfig load() const { return load_config(config); }
};

/// Throws a non-harness exception once `budget` calls are used, standing in
/// for a process dying mid-run.
class CrashingChat : public ChatProvider {
public:
    CrashingChat(std::shared_ptr<ChatProvider> inner, std::size_t budget)
        : inner_(std::move(inner)), budget_(budget) {}
    std::string kind() const override { return inner_->kind(); }

protected:
    std::string complete(std::span<const ChatMessage> m, const ChatParams& p) override {
        if (used_++ >= budget_) throw std::runtime_error("simulated crash");
        return inner_->chat_complete(m, p);
    }

private:
    std::shared_ptr<ChatProvider> inner_;
    std::size_t budget_;
    std::atomic<std::size_t> used_{0};
};

}  // namespace

TEST(Config, DemoConfigParses) {
    Demo d;
    auto cfg = d.load();
    EXPECT_EQ(cfg.parallelism, 4u);
    EXPECT_EQ(cfg.frames_per_prompt, 2u);
    EXPECT_EQ(cfg.max_attempts, 5);
    EXPECT_EQ(cfg.metrics.size(), 4u);
    EXPECT_EQ(cfg.candidates.size(), 2u);
    EXPECT_EQ(cfg.candidates.at("mock-vlm-a").model_id, "mock-vlm-a");
    EXPECT_TRUE(cfg.manifest.is_absolute());
    EXPECT_EQ(cfg.manifest, d.dir.path() / "manifest.csv");
    EXPECT_DOUBLE_EQ(cfg.thresholds.cosine_threshold, 0.5);
    EXPECT_DOUBLE_EQ(cfg.thresholds.bert_threshold, 0.9);
}

TEST(Config, SnapshotReparsesToSameSnapshot) {
    Demo d;
    auto cfg = d.load();
    auto again = parse_config(json::parse(cfg.snapshot().dump()), d.dir.path());
    EXPECT_EQ(again.snapshot().dump(), cfg.snapshot().dump());
}

TEST(Config, ValidationErrors) {
    auto base = json{{"manifest", "m.csv"}, {"lexicon", "l.json"}};
    EXPECT_NO_THROW(parse_config(base, "/tmp"));
    auto bad = [&](const char* key, json value) {
        auto j = base;
        j[key] = value;
        return j;
    };
    EXPECT_THROW(parse_config(bad("metrics", {"keywords", "bleu"}), "/tmp"), ConfigError);
    EXPECT_THROW(parse_config(bad("parallelism", 0), "/tmp"), ConfigError);
    EXPECT_THROW(parse_config(bad("frames_per_prompt", 3), "/tmp"), ConfigError);
    EXPECT_THROW(parse_config(bad("max_attempts", 0), "/tmp"), ConfigError);
    EXPECT_THROW(parse_config(bad("thresholds", {{"cosine", 1.5}}), "/tmp"), ConfigError);
    EXPECT_THROW(parse_config(bad("colour", "blue"), "/tmp"), ConfigError);
    EXPECT_THROW(parse_config(bad("seed", "abc"), "/tmp"), ConfigError);
    EXPECT_THROW(parse_config(bad("evaluate", {{"split", "XY"}}), "/tmp"), ConfigError);
    EXPECT_THROW(parse_config(bad("providers", {{"caption", {{"kind", "grpc"}}}}), "/tmp"), ConfigError);
    EXPECT_THROW(parse_config(bad("providers", {{"caption", {{"kind", "http"}}}}), "/tmp"), ConfigError);
    EXPECT_THROW(parse_config(bad("providers", {{"narrator", json::object()}}), "/tmp"), ConfigError);
    EXPECT_THROW(parse_config(json{{"lexicon", "l.json"}}, "/tmp"), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Templates, FilesOverrideDefaults) {
    TempDir tmp("tpl");
    write_file_atomic(tmp / "caption_refine.txt", "Again for {label}; MUST use {keywords}\n");
    auto t = load_templates(tmp.path());
    EXPECT_EQ(t.caption.refine_user_text, "Again for {label}; MUST use {keywords}");
    EXPECT_EQ(t.caption.initial_user_text, PromptTemplate::defaults().initial_user_text);
    write_file_atomic(tmp / "caption_initial.txt", "no placeholder");
    EXPECT_THROW(load_templates(tmp.path()), ConfigError);
}

TEST(ParallelFor, CoversEveryIndexAndRethrows) {
    std::vector<std::atomic<int>> hits(100);
    parallel_for(100, 4, [&](std::size_t i) { ++hits[i]; });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
    EXPECT_THROW(parallel_for(50, 3, [](std::size_t i) {
                     if (i == 7) throw std::runtime_error("x");
                 }),
                 std::runtime_error);
    parallel_for(0, 4, [](std::size_t) { FAIL(); });
}

TEST(SafeName, Sanitizes) {
    EXPECT_EQ(safe_name("a/b c"), "a_b_c");
    EXPECT_EQ(safe_name(".."), "_..");
    EXPECT_EQ(safe_name("Cook_Cleanup_p03"), "Cook_Cleanup_p03");
}

TEST(Keyframes, IndexFilesAndResume) {
    Demo d;
    auto cfg = d.load();
    auto s = cmd_keyframes(cfg);
    EXPECT_EQ(s.computed, 36u);
    EXPECT_TRUE(s.failures.empty());
    auto kf = cfg.out_dir / "keyframes";
    EXPECT_EQ(count_files(kf), 36u + 2u);  // + settings.json, summary.json
    auto first = synthetic::demo_records().front().video_id;
    EXPECT_EQ(split_lines(read_file(kf / (first + ".txt"))).size(), 2u);
    auto again = cmd_keyframes(cfg);
    EXPECT_EQ(again.computed, 0u);
    EXPECT_EQ(again.skipped, 36u);
}

TEST(Keyframes, OneScenePerKeyframeOnDemoVideos) {
    Demo d;
    auto cfg = d.load();
    cmd_keyframes(cfg);
    for (const auto& rec : load_manifest(cfg.manifest).records) {
        auto lines = split_lines(read_file(cfg.out_dir / "keyframes" / (rec.video_id + ".txt")));
        ASSERT_EQ(lines.size(), 2u);
        EXPECT_LT(lines[0], "0004.pgm");
        EXPECT_GE(lines[1], "0004.pgm");
    }
}

TEST(Keyframes, UnreadableVideoIsRecordedOthersComplete) {
    Demo d;
    auto victim = synthetic::demo_records().at(29).video_id;
    fs::remove_all(d.dir / "frames" / victim);
    auto s = cmd_keyframes(d.load());
    EXPECT_EQ(s.failures.size(), 1u);
    EXPECT_TRUE(s.failures.count(victim));
    EXPECT_EQ(s.computed, 35u);
}

TEST(Keyframes, ChangedSettingsInvalidateIndexFiles) {
    Demo d;
    cmd_keyframes(d.load());
    edit_config(d.config, [](auto& j) { j["seed"] = 9; });
    EXPECT_EQ(cmd_keyframes(d.load()).computed, 36u);
}

TEST(Keyframes, PngFramesWork) {
    synthetic::DemoOptions opt;
    opt.png = true;
    Demo d(opt);
    auto s = cmd_keyframes(d.load());
    EXPECT_EQ(s.computed, 36u);
    EXPECT_TRUE(s.failures.empty());
}

TEST(Keyframes, DecodeCommandPreStep) {
    Demo d;
    // Pack one video's frames into a single "container" file and let the
    // decode command unpack it.
    auto id = synthetic::demo_records().at(20).video_id;
    auto src = d.dir / "frames" / id;
    auto archive = d.dir / (id + ".tar");
    ASSERT_EQ(std::system(("tar -cf " + archive.string() + " -C " + src.string() + " .").c_str()), 0);
    fs::remove_all(src);
    auto m = load_manifest(d.dir / "manifest.csv");
    for (auto& r : m.records) {
        if (r.video_id == id) r.frames_uri = id + ".tar";
    }
    save_manifest(m, d.dir / "manifest.csv", ManifestFormat::csv);
    edit_config(d.config, [](auto& j) { j["decode_command"] = "tar -xf {video} -C {frames_dir}"; });
    auto s = cmd_keyframes(d.load());
    EXPECT_TRUE(s.failures.empty());
    EXPECT_TRUE(fs::exists(d.dir / "out" / "frames" / id / "0000.pgm"));
}

TEST(BuildCaptions, FullCoverageWithFixtureChat) {
    Demo d;
    auto cfg = d.load();
    auto providers = make_providers(cfg, load_lexicon(cfg.lexicon));
    auto s = cmd_build_captions(cfg, providers);
    EXPECT_EQ(s.exit_code(), kExitOk);
    EXPECT_DOUBLE_EQ(s.coverage.coverage_fraction, 1.0);
    EXPECT_EQ(s.generated, 36u);
    auto caps = load_captions(cfg.out_dir / "captions.jsonl");
    ASSERT_EQ(caps.size(), 36u);
    EXPECT_TRUE(std::is_sorted(caps.begin(), caps.end(),
                               [](const auto& a, const auto& b) { return a.video_id < b.video_id; }));
    for (const auto& c : caps) {
        EXPECT_EQ(c.status, CaptionStatus::verified);
        EXPECT_EQ(c.attempts, 2);
    }
    auto cov = json::parse(read_file(cfg.out_dir / "coverage.json"));
    EXPECT_EQ(cov["coverage_fraction"], 1.0);
}

TEST(BuildCaptions, OffTopicVideoFailsCoverage) {
    Demo d;
    edit_config(d.config, [](auto& j) {
        j["max_attempts"] = 3;
        j["providers"]["caption"]["mock"] = {{"off_topic_labels", {"Eat_Snack"}}};
    });
    auto cfg = d.load();
    auto providers = make_providers(cfg, load_lexicon(cfg.lexicon));
    auto s = cmd_build_captions(cfg, providers);
    EXPECT_EQ(s.exit_code(), kExitCoverage);
    EXPECT_EQ(s.coverage.offending_ids.size(), 6u);
    EXPECT_NEAR(s.coverage.coverage_fraction, 30.0 / 36.0, 1e-12);
    for (const auto& c : load_captions(cfg.out_dir / "captions.jsonl")) {
        if (c.label == "Eat_Snack") {
            EXPECT_EQ(c.status, CaptionStatus::exhausted);
            EXPECT_EQ(c.attempts, 3);
        }
    }
}

TEST(BuildCaptions, ResumeSkipsVerifiedVideos) {
    Demo d;
    auto cfg = d.load();
    auto lex = load_lexicon(cfg.lexicon);
    {
        auto p = make_providers(cfg, lex);
        cmd_build_captions(cfg, p);
    }
    fs::remove_all(cfg.cache_dir);
    auto p2 = make_providers(cfg, lex);
    auto s = cmd_build_captions(cfg, p2);
    EXPECT_EQ(s.reused, 36u);
    EXPECT_EQ(s.generated, 0u);
    EXPECT_EQ(p2.backend_calls(), 0u);
}

TEST(BuildCaptions, CrashThenResumeMatchesUninterrupted) {
    Demo clean;
    auto ccfg = clean.load();
    {
        auto p = make_providers(ccfg, load_lexicon(ccfg.lexicon));
        cmd_build_captions(ccfg, p);
    }

    Demo d;
    auto cfg = d.load();
    auto lex = load_lexicon(cfg.lexicon);
    for (std::size_t budget : {5u, 11u, 17u}) {
        auto p = make_providers(cfg, lex);
        p.caption = std::make_shared<CrashingChat>(p.caption, budget);
        EXPECT_THROW(cmd_build_captions(cfg, p), std::runtime_error);
    }
    auto p = make_providers(cfg, lex);
    auto s = cmd_build_captions(cfg, p);
    EXPECT_GT(s.reused, 0u);
    for (const char* f : {"captions.jsonl", "traces.jsonl", "coverage.json"}) {
        EXPECT_EQ(read_file(cfg.out_dir / f), read_file(ccfg.out_dir / f)) << f;
    }
}

TEST(Evaluate, VerdictFilesAndCounts) {
    Demo d;
    auto cfg = d.load();
    auto lex = load_lexicon(cfg.lexicon);
    auto p = make_providers(cfg, lex);
    cmd_build_captions(cfg, p);
    auto s = cmd_evaluate(cfg, p, "mock-vlm-a");
    EXPECT_EQ(s.split_name, "CS");
    auto cs = split_cs(load_manifest(cfg.manifest));
    EXPECT_EQ(s.test_records, cs.test.size());
    auto dir = cfg.out_dir / "verdicts" / "mock-vlm-a" / "CS";
    for (auto m : cfg.metrics) {
        EXPECT_EQ(s.verdicts.at(m), cs.test.size());
        EXPECT_EQ(s.failures.at(m), 0u);
        auto rows = load_verdicts(dir / (std::string(to_string(m)) + ".jsonl"));
        ASSERT_EQ(rows.size(), cs.test.size());
        EXPECT_TRUE(std::is_sorted(rows.begin(), rows.end(),
                                   [](const auto& a, const auto& b) { return a.video_id < b.video_id; }));
        for (const auto& r : rows) {
            EXPECT_EQ(r.model_id, "mock-vlm-a");
            if (r.verdict.score && r.verdict.threshold) {
                EXPECT_EQ(r.verdict.correct, *r.verdict.score > *r.verdict.threshold);
            }
        }
    }
    auto run = json::parse(read_file(dir / "run.json"));
    EXPECT_EQ(run["candidate"], "mock-vlm-a");
    EXPECT_EQ(run["config"], json::parse(cfg.snapshot().dump()));
    EXPECT_TRUE(fs::exists(dir / "timing.json"));
    EXPECT_THROW(cmd_evaluate(cfg, p, "nope"), ConfigError);
}

TEST(Evaluate, ScriptedCandidateMatchesHandComputedMca) {
    Demo d;
    edit_config(d.config, [](auto& j) { j["metrics"] = {"keywords"}; });
    auto cfg = d.load();
    auto lex = load_lexicon(cfg.lexicon);
    auto p = make_providers(cfg, lex);
    cmd_build_captions(cfg, p);
    auto test = split_cs(load_manifest(cfg.manifest)).test;
    std::sort(test.begin(), test.end(), [](const auto& a, const auto& b) { return a.video_id < b.video_id; });
    // Serial run so script order follows the sorted test records.
    cfg.parallelism = 1;
    std::vector<std::string> script;
    std::vector<std::pair<std::string, bool>> expected;
    for (std::size_t i = 0; i < test.size(); ++i) {
        bool ok = i % 3 != 0;
        script.push_back(ok ? "Someone does " + lex.at(test[i].label).front() + " now." : "Nothing relevant.");
        expected.emplace_back(test[i].label, ok);
    }
    p.candidates["scripted"] = {std::make_shared<ScriptedChat>(script), ChatParams{"scripted", 32, 0.0}};
    auto s = cmd_evaluate(cfg, p, "scripted");
    EXPECT_NEAR(s.mca.at(Metric::keywords).mca, oracle::mean_class_accuracy(expected), 1e-12);
}

TEST(Evaluate, WarmCacheMakesNoBackendCalls) {
    Demo d;
    auto cfg = d.load();
    auto lex = load_lexicon(cfg.lexicon);
    {
        auto p = make_providers(cfg, lex);
        cmd_build_captions(cfg, p);
        cmd_evaluate(cfg, p, "mock-vlm-b");
        EXPECT_GT(p.backend_calls(), 0u);
    }
    auto first = snapshot_tree(cfg.out_dir / "verdicts", timing_files());
    auto p = make_providers(cfg, lex);
    cmd_evaluate(cfg, p, "mock-vlm-b");
    EXPECT_EQ(p.backend_calls(), 0u);
    EXPECT_EQ(snapshot_tree(cfg.out_dir / "verdicts", timing_files()), first);
}

TEST(Evaluate, MissingCaptionsIsMissingArtifacts) {
    Demo d;
    auto cfg = d.load();
    auto p = make_providers(cfg, load_lexicon(cfg.lexicon));
    EXPECT_THROW(cmd_evaluate(cfg, p, "mock-vlm-a"), MissingArtifacts);
}

TEST(Evaluate, CvSplitFilesUnderSharedDirectory) {
    Demo d;
    edit_config(d.config, [](auto& j) {
        j["evaluate"]["split"] = "CV2";
        j["metrics"] = {"keywords"};
    });
    auto cfg = d.load();
    auto p = make_providers(cfg, load_lexicon(cfg.lexicon));
    cmd_build_captions(cfg, p);
    auto s = cmd_evaluate(cfg, p, "mock-vlm-a");
    EXPECT_EQ(s.split_name, "CV");
    auto rows = load_verdicts(cfg.out_dir / "verdicts" / "mock-vlm-a" / "CV" / "keywords.jsonl");
    auto cv = split_cv(load_manifest(cfg.manifest), Protocol::CV1);
    EXPECT_EQ(rows.size(), cv.test.size());
    for (const auto& r : cv.test) {
        EXPECT_EQ(r.camera_id, 2);
        EXPECT_NE(r.label, "Usetelephone");
    }
}

TEST(Evaluate, Phase1SamplesPerClass) {
    Demo d;
    edit_config(d.config, [](auto& j) {
        j["evaluate"] = {{"split", "phase1"}, {"samples_per_class", 4}};
        j["metrics"] = {"keywords"};
    });
    auto cfg = d.load();
    auto p = make_providers(cfg, load_lexicon(cfg.lexicon));
    cmd_build_captions(cfg, p);
    auto s = cmd_evaluate(cfg, p, "mock-vlm-a");
    EXPECT_EQ(s.split_name, "phase1");
    EXPECT_EQ(s.test_records, 6u * 4u);
    EXPECT_EQ(s.mca.at(Metric::keywords).per_class.size(), 6u);
}

TEST(Determinism, TwoRunsAreByteIdentical) {
    Demo d;
    auto cfg = d.load();
    run_full_pipeline(cfg);
    auto first = snapshot_tree(cfg.out_dir, timing_files());
    fs::remove_all(cfg.out_dir);
    fs::remove_all(cfg.cache_dir);
    run_full_pipeline(cfg);
    auto second = snapshot_tree(cfg.out_dir, timing_files());
    EXPECT_EQ(first.size(), second.size());
    for (const auto& [path, body] : first) {
        auto it = second.find(path);
        ASSERT_NE(it, second.end()) << path;
        EXPECT_EQ(it->second, body) << path;
    }
}

TEST(Determinism, ParallelismDoesNotChangeArtifacts) {
    Demo d;
    edit_config(d.config, [](auto& j) { j["parallelism"] = 1; });
    auto serial = d.load();
    run_full_pipeline(serial);
    auto a = snapshot_tree(serial.out_dir, timing_files());
    fs::remove_all(serial.out_dir);
    fs::remove_all(serial.cache_dir);
    edit_config(d.config, [](auto& j) { j["parallelism"] = 6; });
    auto wide = d.load();
    run_full_pipeline(wide);
    auto b = snapshot_tree(wide.out_dir, timing_files());
    // run.json embeds the config snapshot, which records parallelism.
    for (auto* m : {&a, &b}) {
        for (auto it = m->begin(); it != m->end();) {
            it = it->first.ends_with("run.json") ? m->erase(it) : std::next(it);
        }
    }
    EXPECT_EQ(a, b);
}

TEST(Split, CsvFilesPerProtocol) {
    Demo d;
    auto cfg = d.load();
    auto cs = cmd_split(cfg, Protocol::CS);
    auto dir = cfg.out_dir / "splits";
    auto m = load_manifest(dir / "CS.csv");
    EXPECT_EQ(m.records.size(), cs.train.size() + cs.test.size());
    EXPECT_EQ(m.records.size(), 36u);
    auto cv = cmd_split(cfg, Protocol::CV1);
    auto tax = split_lines(read_file(dir / "CV1_taxonomy.txt"));
    EXPECT_EQ(tax.size(), 5u);
    EXPECT_EQ(cv.restricted_taxonomy.size(), 5u);
    auto flags = json::parse(read_file(dir / "CV1_flags.json"));
    EXPECT_EQ(flags.size(), 1u);  // 5 classes instead of 19
    auto header = split_lines(read_file(dir / "CV1.csv")).front();
    EXPECT_TRUE(header.ends_with(",split"));
}

TEST(Report, HandBuiltVerdictsGiveExpectedMca) {
    Demo d;
    auto cfg = d.load();
    auto recs = synthetic::demo_records();
    // Two Cook_Cleanup videos (one right), one Readbook video (right).
    std::vector<VerdictRow> rows{
        {recs[0].video_id, {Metric::keywords, true, std::nullopt, std::nullopt, "wipe"}, "m1"},
        {recs[1].video_id, {Metric::keywords, false, std::nullopt, std::nullopt, ""}, "m1"},
        {recs[18].video_id, {Metric::keywords, true, std::nullopt, std::nullopt, "read"}, "m1"},
    };
    ASSERT_EQ(recs[18].label, "Readbook");
    std::string text;
    for (const auto& r : rows) text += to_json(r).dump() + "\n";
    write_file_atomic(cfg.out_dir / "verdicts" / "m1" / "CS" / "keywords.jsonl", text);
    auto t = cmd_report(cfg);
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_EQ(t.rows.at({"m1", "keywords"}).at("CS").report.mca, 0.75);
    EXPECT_NE(read_file(cfg.out_dir / "report.txt").find("75.0"), std::string::npos);
    auto j = json::parse(read_file(cfg.out_dir / "report.json"));
    EXPECT_EQ(j["rows"][0]["columns"]["CS"]["verdicts"], 3);

    write_file_atomic(cfg.out_dir / "verdicts" / "m2" / "CS" / "keywords.jsonl",
                      to_json(VerdictRow{recs[0].video_id, {Metric::keywords, false, {}, {}, ""}, "m2"}).dump() +
                          "\n");
    EXPECT_EQ(cmd_report(cfg).rows.size(), 2u);
}

TEST(Report, NoVerdictsIsMissingArtifacts) {
    Demo d;
    EXPECT_THROW(cmd_report(d.load()), MissingArtifacts);
}

TEST(Report, CvColumnsMirrorEachOther) {
    Demo d;
    edit_config(d.config, [](auto& j) {
        j["evaluate"]["split"] = "CV";
        j["metrics"] = {"keywords"};
    });
    auto cfg = d.load();
    auto p = make_providers(cfg, load_lexicon(cfg.lexicon));
    cmd_build_captions(cfg, p);
    cmd_evaluate(cfg, p, "mock-vlm-b");
    auto t = cmd_report(cfg);
    const auto& row = t.rows.at({"mock-vlm-b", "keywords"});
    EXPECT_EQ(row.at("CV1").report.mca, row.at("CV2").report.mca);
    EXPECT_FALSE(row.count("CS"));
}

// ---------------------------------------------------------------------------
// CLI

TEST(Cli, ExitCodes) {
    Demo d;
    auto log = d.dir / "log.txt";
    auto cfg = d.config.string();
    EXPECT_EQ(run_cli({"keyframes", "--config", cfg}, log), kExitOk);
    EXPECT_EQ(run_cli({"build-captions", "--config", cfg}, log), kExitOk);
    EXPECT_EQ(run_cli({"evaluate", "--config", cfg, "--model", "mock-vlm-a"}, log), kExitOk);
    EXPECT_EQ(run_cli({"split", "--config", cfg, "--protocol", "CV2"}, log), kExitOk);
    EXPECT_EQ(run_cli({"report", "--config", cfg}, log), kExitOk);
    EXPECT_NE(read_file(log).find("mock-vlm-a"), std::string::npos);

    EXPECT_EQ(run_cli({"evaluate", "--config", cfg, "--model", "nope"}, log), kExitConfig);
    EXPECT_EQ(run_cli({"report", "--config", (d.dir / "missing.json").string()}, log), kExitConfig);
    edit_config(d.config, [](auto& j) { j["bogus"] = 1; });
    EXPECT_EQ(run_cli({"keyframes", "--config", cfg}, log), kExitConfig);
}

TEST(Cli, CoverageFailureExitsThree) {
    Demo d;
    edit_config(d.config, [](auto& j) {
        j["max_attempts"] = 2;
        j["providers"]["caption"]["mock"] = {{"off_topic_labels", {"Sitdown"}}};
    });
    auto log = d.dir / "log.txt";
    EXPECT_EQ(run_cli({"build-captions", "--config", d.config.string()}, log), kExitCoverage);
}

TEST(Cli, UnreachableBackendExitsFour) {
    Demo d;
    edit_config(d.config, [](auto& j) {
        j["providers"]["caption"] = {{"kind", "http"},
                                     {"base_url", "http://127.0.0.1:9"},
                                     {"model_id", "x"},
                                     {"timeout_ms", 200},
                                     {"retry_delay_ms", 1}};
        j["parallelism"] = 1;
    });
    auto log = d.dir / "log.txt";
    EXPECT_EQ(run_cli({"build-captions", "--config", d.config.string()}, log), kExitProvider);
}

TEST(Cli, KilledBuildResumesToSameArtifacts) {
    Demo ref;
    auto ref_log = ref.dir / "log.txt";
    ASSERT_EQ(run_cli({"build-captions", "--config", ref.config.string()}, ref_log), kExitOk);

    Demo d;
    edit_config(d.config, [](auto& j) {
        j["parallelism"] = 1;
        j["providers"]["caption"]["mock"] = {{"latency_ms", 30}};
    });
    auto log = d.dir / "log.txt";
    auto child = spawn({HARCAP_CLI_PATH, "build-captions", "--config", d.config.string()}, log);
    ASSERT_GT(child.pid, 0);
    auto ckpt = d.dir / "out" / "captions.d";
    // A killed writer can leave a temp file behind; count finished checkpoints only.
    auto count_checkpoints = [&] {
        std::size_t n = 0;
        std::error_code ec;
        for (const auto& e : fs::directory_iterator(ckpt, ec)) n += e.path().extension() == ".json";
        return n;
    };
    auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(60);
    while (count_checkpoints() < 3 && std::chrono::steady_clock::now() < deadline) {
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    ::kill(child.pid, SIGKILL);
    EXPECT_EQ(wait_for(child), -SIGKILL);
    auto done = count_checkpoints();
    EXPECT_GE(done, 3u);
    EXPECT_LT(done, 36u);

    ASSERT_EQ(run_cli({"build-captions", "--config", d.config.string()}, log), kExitOk);
    EXPECT_NE(read_file(log).find(std::to_string(done) + " reused"), std::string::npos) << read_file(log);
    for (const char* f : {"captions.jsonl", "traces.jsonl", "coverage.json"}) {
        EXPECT_EQ(read_file(d.dir / "out" / f), read_file(ref.dir / "out" / f)) << f;
    }
}
