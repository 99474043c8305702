// harcap: build keyword-verified activity captions and score VLM outputs.

#include <harcap/harcap.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace {

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> parallelism;
    std::optional<std::string> cache_dir;
    std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config, "Run configuration (JSON)")->required();
    cmd->add_option("--seed", f.seed, "Override the configured seed");
    cmd->add_option("--parallelism", f.parallelism, "Concurrent per-video tasks")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--cache-dir", f.cache_dir, "Provider response cache directory");
    cmd->add_option("--out", f.out, "Output directory");
}

harcap::RunConfig resolve_config(const CommonFlags& f) {
    auto cfg = harcap::load_config(f.config);
    if (f.seed) {
        cfg.seed = *f.seed;
        cfg.keyframe.seed = *f.seed;
    }
    if (f.parallelism) cfg.parallelism = *f.parallelism;
    if (f.cache_dir) cfg.cache_dir = harcap::fs::absolute(*f.cache_dir);
    if (f.out) cfg.out_dir = harcap::fs::absolute(*f.out);
    cfg.validate();
    return cfg;
}

void print_json(const harcap::ordered_json& j) { std::cout << j.dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"harcap - human activity caption benchmark harness"};
    app.require_subcommand(1);

    CommonFlags flags;
    auto* keyframes = app.add_subcommand("keyframes", "Select keyframes for every manifest video");
    add_common(keyframes, flags);

    auto* build = app.add_subcommand("build-captions", "Generate and verify ground-truth captions");
    add_common(build, flags);

    std::string model;
    auto* evaluate = app.add_subcommand("evaluate", "Caption test videos with a candidate VLM and score them");
    add_common(evaluate, flags);
    evaluate->add_option("--model", model, "Candidate model (key under providers.candidates)")->required();

    std::string protocol;
    auto* split = app.add_subcommand("split", "Write train/test manifests for a protocol");
    add_common(split, flags);
    split->add_option("--protocol", protocol, "CS, CV1 or CV2")
        ->required()
        ->check(CLI::IsMember({"CS", "CV1", "CV2"}));

    auto* report = app.add_subcommand("report", "Mean Class Accuracy table from verdict files");
    add_common(report, flags);

    CLI11_PARSE(app, argc, argv);

    try {
        auto cfg = resolve_config(flags);

        if (*keyframes) {
            auto s = harcap::cmd_keyframes(cfg);
            std::cout << "keyframes: " << s.computed << " computed, " << s.skipped << " skipped, "
                      << s.failures.size() << " failed\n";
            for (const auto& [id, why] : s.failures) std::cerr << "  " << id << ": " << why << "\n";
            return harcap::kExitOk;
        }

        if (*build) {
            auto lexicon = harcap::load_lexicon(cfg.lexicon);
            auto providers = harcap::make_providers(cfg, lexicon);
            auto s = harcap::cmd_build_captions(cfg, providers);
            std::cout << "captions: " << s.generated << " generated, " << s.reused << " reused, "
                      << s.failures.size() << " failed\n";
            auto cov = harcap::to_json(s.coverage);
            print_json(cov);
            return s.exit_code();
        }

        if (*evaluate) {
            auto lexicon = harcap::load_lexicon(cfg.lexicon);
            auto providers = harcap::make_providers(cfg, lexicon);
            auto s = harcap::cmd_evaluate(cfg, providers, model);
            std::cout << "evaluate " << model << " on " << s.split_name << ": " << s.test_records
                      << " test videos\n";
            for (const auto& [metric, rep] : s.mca) {
                std::cout << "  " << harcap::to_string(metric) << ": MCA "
                          << harcap::format_percent(rep.mca) << "  (" << s.failures.at(metric)
                          << " failures)\n";
            }
            for (const auto& f : s.flags) std::cout << "  note: " << f << "\n";
            return s.exit_code();
        }

        if (*split) {
            auto r = harcap::cmd_split(cfg, *harcap::protocol_from_string(protocol));
            std::cout << protocol << ": train " << r.train.size() << ", test " << r.test.size();
            if (protocol != "CS") std::cout << ", classes " << r.restricted_taxonomy.size();
            std::cout << "\n";
            for (const auto& f : r.flags) std::cout << "  note: " << f << "\n";
            return harcap::kExitOk;
        }

        if (*report) {
            auto t = harcap::cmd_report(cfg);
            std::cout << harcap::format_report_text(t);
            return harcap::kExitOk;
        }
    } catch (const harcap::TransportError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return harcap::kExitProvider;
    } catch (const harcap::Error& e) {
        std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
        return harcap::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return harcap::kExitConfig;
    }
    return harcap::kExitOk;
}
