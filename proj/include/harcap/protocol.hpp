#pragma once

// Evaluation protocols for the Toyota Smarthome benchmark: cross-subject
// (CS), cross-view (CV1/CV2), per-class subsets and Mean Class Accuracy.

#include <harcap/dataset.hpp>
#include <harcap/rng.hpp>

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace harcap {

enum class Protocol { CS, CV1, CV2 };

inline std::string_view to_string(Protocol p) {
    switch (p) {
        case Protocol::CS: return "CS";
        case Protocol::CV1: return "CV1";
        case Protocol::CV2: return "CV2";
    }
    return "?";
}

inline std::optional<Protocol> protocol_from_string(std::string_view s) {
    for (auto p : {Protocol::CS, Protocol::CV1, Protocol::CV2}) {
        if (to_string(p) == s) return p;
    }
    return std::nullopt;
}

inline const std::set<int>& cs_train_subjects() {
    static const std::set<int> s{3, 4, 6, 7, 9, 12, 13, 15, 17, 19, 25};
    return s;
}

inline const std::set<int>& cv_train_cameras(Protocol p) {
    static const std::set<int> cv1{1};
    static const std::set<int> cv2{1, 3, 4, 6, 7};
    static const std::set<int> none{};
    switch (p) {
        case Protocol::CV1: return cv1;
        case Protocol::CV2: return cv2;
        default: return none;
    }
}

constexpr int kCvTestCamera = 2;
constexpr std::size_t kExpectedCvClasses = 19;

struct SplitResult {
    Protocol protocol = Protocol::CS;
    std::vector<VideoRecord> train;
    std::vector<VideoRecord> test;
    std::set<ActivityLabel> restricted_taxonomy;  // CV only
    std::vector<std::string> flags;
};

inline SplitResult split_cs(const Manifest& m) {
    SplitResult r;
    r.protocol = Protocol::CS;
    const auto& subjects = cs_train_subjects();
    std::set<int> seen_train;
    for (const auto& rec : m.records) {
        if (subjects.count(rec.subject_id)) {
            r.train.push_back(rec);
            seen_train.insert(rec.subject_id);
        } else {
            r.test.push_back(rec);
        }
    }
    if (m.records.empty()) r.flags.push_back("empty manifest");
    if (seen_train.size() < subjects.size()) {
        std::string missing;
        for (int s : subjects) {
            if (!seen_train.count(s)) missing += (missing.empty() ? "" : ",") + std::to_string(s);
        }
        r.flags.push_back("training subjects absent from manifest: " + missing);
    }
    if (r.test.empty()) r.flags.push_back("empty test split");
    return r;
}

/// Labels recorded by both camera 1 and the test camera; train/test are
/// restricted to them. Records from cameras outside the variant's train
/// set (and not the test camera) are not admitted.
inline SplitResult split_cv(const Manifest& m, Protocol variant) {
    if (variant == Protocol::CS) throw PreconditionViolation("split_cv needs CV1 or CV2");
    SplitResult r;
    r.protocol = variant;
    std::set<ActivityLabel> on_cam1, on_test;
    for (const auto& rec : m.records) {
        if (rec.camera_id == 1) on_cam1.insert(rec.label);
        if (rec.camera_id == kCvTestCamera) on_test.insert(rec.label);
    }
    std::set_intersection(on_cam1.begin(), on_cam1.end(), on_test.begin(), on_test.end(),
                          std::inserter(r.restricted_taxonomy, r.restricted_taxonomy.end()));
    const auto& train_cams = cv_train_cameras(variant);
    for (const auto& rec : m.records) {
        if (!r.restricted_taxonomy.count(rec.label)) continue;
        if (rec.camera_id == kCvTestCamera) r.test.push_back(rec);
        else if (train_cams.count(rec.camera_id)) r.train.push_back(rec);
    }
    if (m.records.empty()) r.flags.push_back("empty manifest");
    if (r.restricted_taxonomy.size() != kExpectedCvClasses) {
        r.flags.push_back("cross-view taxonomy has " + std::to_string(r.restricted_taxonomy.size()) +
                          " classes (reference dataset: 19)");
    }
    return r;
}

inline SplitResult split(const Manifest& m, Protocol p) {
    return p == Protocol::CS ? split_cs(m) : split_cv(m, p);
}

struct SampleResult {
    std::vector<VideoRecord> records;
    std::vector<std::string> flags;
};

/// Up to `n` records per label, uniformly without replacement. Each label
/// draws from its own stream (seed split by label hash), so one class's
/// draw never depends on another's. Output: labels in sorted order, records
/// in manifest order within a label.
inline SampleResult sample_per_class(const Manifest& m, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw PreconditionViolation("sample_per_class: n must be positive");
    std::map<ActivityLabel, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < m.records.size(); ++i) by_label[m.records[i].label].push_back(i);

    const CounterRng root(seed);
    SampleResult out;
    for (auto& [label, idx] : by_label) {
        if (idx.size() < n) {
            out.flags.push_back("class " + label + " has only " + std::to_string(idx.size()) +
                                " records (wanted " + std::to_string(n) + ")");
        }
        const auto take = std::min(n, idx.size());
        auto rng = root.split(fnv1a64(label));
        // Partial Fisher-Yates over a copy; first `take` slots are the sample.
        auto pool = idx;
        for (std::size_t i = 0; i < take; ++i) {
            auto j = i + static_cast<std::size_t>(rng.below(i, pool.size() - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(take);
        std::sort(pool.begin(), pool.end());
        for (auto i : pool) out.records.push_back(m.records[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Mean Class Accuracy

struct LabeledVerdict {
    std::string video_id;
    ActivityLabel label;
    bool correct = false;
};

struct ClassTally {
    std::size_t total = 0;
    std::size_t correct = 0;
    double accuracy() const {
        return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
    }
};

struct MCAReport {
    std::map<ActivityLabel, ClassTally> per_class;
    double mca = 0.0;
};

inline MCAReport mca_from_tallies(std::map<ActivityLabel, ClassTally> tallies) {
    MCAReport r;
    r.per_class = std::move(tallies);
    std::size_t classes = 0;
    double sum = 0.0;
    for (const auto& [_, t] : r.per_class) {
        if (t.total == 0) continue;
        sum += t.accuracy();
        ++classes;
    }
    r.mca = classes ? sum / static_cast<double>(classes) : 0.0;
    return r;
}

/// Unweighted mean of per-class accuracy; classes with no verdicts do not
/// participate.
inline MCAReport mca(std::span<const LabeledVerdict> verdicts) {
    std::map<ActivityLabel, ClassTally> tallies;
    for (const auto& v : verdicts) {
        auto& t = tallies[v.label];
        ++t.total;
        if (v.correct) ++t.correct;
    }
    return mca_from_tallies(std::move(tallies));
}

inline ordered_json to_json(const MCAReport& r) {
    ordered_json per = ordered_json::object();
    for (const auto& [label, t] : r.per_class) {
        per[label] = {{"total", t.total}, {"correct", t.correct}, {"accuracy", t.accuracy()}};
    }
    ordered_json j;
    j["mca"] = r.mca;
    j["per_class"] = std::move(per);
    return j;
}

}  // namespace harcap
