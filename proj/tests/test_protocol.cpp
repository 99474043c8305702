#include <harcap/protocol.hpp>

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace harcap;

namespace {

const std::set<int> kTrainSubjects{3, 4, 6, 7, 9, 12, 13, 15, 17, 19, 25};

std::vector<VideoRecord> eighteen_subjects() {
    std::vector<VideoRecord> recs;
    const std::vector<int> ids{2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 19, 25};
    for (int s : ids) {
        recs.push_back({"Walk_p" + std::to_string(s), "Walk", s, 1 + s % 7, "f"});
    }
    return recs;
}

std::vector<VideoRecord> random_manifest(std::mt19937_64& rng, std::size_t n) {
    std::uniform_int_distribution<int> subj(1, 30), cam(1, 7), lab(0, 7);
    std::vector<VideoRecord> recs;
    for (std::size_t i = 0; i < n; ++i) {
        recs.push_back({"v" + std::to_string(i), "L" + std::to_string(lab(rng)), subj(rng), cam(rng), "f"});
    }
    return recs;
}

std::multiset<std::string> ids(const std::vector<VideoRecord>& r) {
    std::multiset<std::string> out;
    for (const auto& x : r) out.insert(x.video_id);
    return out;
}

}  // namespace

TEST(SplitCs, EighteenSubjects) {
    auto r = split_cs(make_manifest(eighteen_subjects()));
    EXPECT_EQ(r.train.size(), 11u);
    EXPECT_EQ(r.test.size(), 7u);
    std::set<int> train, test;
    for (const auto& x : r.train) train.insert(x.subject_id);
    for (const auto& x : r.test) test.insert(x.subject_id);
    EXPECT_EQ(train, kTrainSubjects);
    for (int s : test) EXPECT_FALSE(kTrainSubjects.count(s));
    EXPECT_TRUE(r.flags.empty());
    EXPECT_EQ(cs_train_subjects(), kTrainSubjects);
}

TEST(SplitCs, PartialAndEmptyManifests) {
    auto r = split_cs(make_manifest({{"a", "X", 3, 1, "f"}, {"b", "X", 4, 1, "f"}}));
    EXPECT_EQ(r.train.size(), 2u);
    EXPECT_EQ(r.test.size(), 0u);
    EXPECT_FALSE(r.flags.empty());
    auto e = split_cs(Manifest{});
    EXPECT_TRUE(e.train.empty());
    EXPECT_TRUE(e.test.empty());
    EXPECT_FALSE(e.flags.empty());
}

TEST(SplitCv, RestrictionExcludesSingleViewLabels) {
    auto m = make_manifest({
        {"a1", "A", 1, 1, "f"}, {"a2", "A", 1, 2, "f"}, {"a3", "A", 1, 3, "f"},
        {"b1", "B", 1, 1, "f"}, {"b2", "B", 1, 2, "f"}, {"b6", "B", 1, 6, "f"},
        {"c1", "C", 1, 1, "f"}, {"c3", "C", 1, 3, "f"},
    });
    auto cv1 = split_cv(m, Protocol::CV1);
    EXPECT_EQ(cv1.restricted_taxonomy, (std::set<std::string>{"A", "B"}));
    EXPECT_EQ(ids(cv1.train), (std::multiset<std::string>{"a1", "b1"}));
    EXPECT_EQ(ids(cv1.test), (std::multiset<std::string>{"a2", "b2"}));
    EXPECT_FALSE(cv1.flags.empty());  // 2 classes, not 19

    auto cv2 = split_cv(m, Protocol::CV2);
    EXPECT_EQ(ids(cv2.train), (std::multiset<std::string>{"a1", "a3", "b1", "b6"}));
    EXPECT_EQ(ids(cv2.test), ids(cv1.test));
    EXPECT_THROW(split_cv(m, Protocol::CS), PreconditionViolation);
}

TEST(SplitCv, NineteenSharedClassesRaiseNoFlag) {
    std::vector<VideoRecord> recs;
    for (int l = 0; l < 19; ++l) {
        recs.push_back({"x" + std::to_string(l) + "c1", "L" + std::to_string(l), 1, 1, "f"});
        recs.push_back({"x" + std::to_string(l) + "c2", "L" + std::to_string(l), 1, 2, "f"});
    }
    recs.push_back({"only1", "Extra", 1, 1, "f"});
    auto r = split_cv(make_manifest(recs), Protocol::CV1);
    EXPECT_EQ(r.restricted_taxonomy.size(), 19u);
    EXPECT_TRUE(r.flags.empty());
}

TEST(Splits, DisjointAndExhaustiveOnRandomManifests) {
    std::mt19937_64 rng(99);
    for (int t = 0; t < 200; ++t) {
        auto recs = random_manifest(rng, 1 + t % 60);
        auto m = make_manifest(recs);

        auto cs = split_cs(m);
        auto all = ids(cs.train);
        for (const auto& id : ids(cs.test)) {
            EXPECT_FALSE(all.count(id));
            all.insert(id);
        }
        EXPECT_EQ(all, ids(recs));

        for (auto p : {Protocol::CV1, Protocol::CV2}) {
            auto cv = split_cv(m, p);
            auto expect_tax = oracle::labels_on_both_views(recs);
            EXPECT_EQ(cv.restricted_taxonomy, expect_tax);
            std::multiset<std::string> admitted;
            for (const auto& r : recs) {
                bool cam_ok = r.camera_id == 2 || cv_train_cameras(p).count(r.camera_id);
                if (expect_tax.count(r.label) && cam_ok) admitted.insert(r.video_id);
            }
            auto got = ids(cv.train);
            for (const auto& id : ids(cv.test)) {
                EXPECT_FALSE(got.count(id));
                got.insert(id);
            }
            EXPECT_EQ(got, admitted);
            for (const auto& r : cv.test) EXPECT_EQ(r.camera_id, 2);
            for (const auto& r : cv.train) EXPECT_TRUE(cv_train_cameras(p).count(r.camera_id));
        }
    }
}

TEST(SamplePerClass, CountsFlagsAndDeterminism) {
    std::vector<VideoRecord> recs;
    for (int l = 0; l < 31; ++l) {
        int n = l == 5 ? 4 : 12 + l % 3;
        for (int i = 0; i < n; ++i) {
            recs.push_back({"c" + std::to_string(l) + "_" + std::to_string(i), "C" + std::to_string(l), 1, 1, "f"});
        }
    }
    auto m = make_manifest(recs);
    auto a = sample_per_class(m, 10, 7);
    EXPECT_EQ(a.records.size(), 30u * 10u + 4u);
    EXPECT_EQ(a.flags.size(), 1u);
    auto b = sample_per_class(m, 10, 7);
    EXPECT_EQ(a.records, b.records);
    auto c = sample_per_class(m, 10, 8);
    EXPECT_NE(a.records, c.records);
    std::map<std::string, int> per;
    for (const auto& r : a.records) ++per[r.label];
    for (const auto& [l, n] : per) EXPECT_EQ(n, l == "C5" ? 4 : 10);
    auto drawn = ids(a.records);
    EXPECT_EQ(drawn.size(), std::set<std::string>(drawn.begin(), drawn.end()).size());
    EXPECT_THROW(sample_per_class(m, 0, 1), PreconditionViolation);
}

TEST(SamplePerClass, OneClassDrawIndependentOfOthers) {
    std::vector<VideoRecord> base;
    for (int i = 0; i < 20; ++i) base.push_back({"a" + std::to_string(i), "A", 1, 1, "f"});
    auto extended = base;
    for (int i = 0; i < 20; ++i) extended.push_back({"b" + std::to_string(i), "B", 1, 1, "f"});
    auto pick_a = [](const SampleResult& s) {
        std::vector<std::string> out;
        for (const auto& r : s.records) {
            if (r.label == "A") out.push_back(r.video_id);
        }
        return out;
    };
    EXPECT_EQ(pick_a(sample_per_class(make_manifest(base), 5, 3)),
              pick_a(sample_per_class(make_manifest(extended), 5, 3)));
}

TEST(SamplePerClass, RoughlyUniform) {
    std::vector<VideoRecord> recs;
    for (int i = 0; i < 10; ++i) recs.push_back({"v" + std::to_string(i), "A", 1, 1, "f"});
    auto m = make_manifest(recs);
    std::map<std::string, int> hits;
    for (std::uint64_t s = 0; s < 4000; ++s) {
        for (const auto& r : sample_per_class(m, 3, s).records) ++hits[r.video_id];
    }
    for (const auto& [_, n] : hits) EXPECT_NEAR(n, 1200, 150);
}

TEST(Mca, HandComputed) {
    std::vector<LabeledVerdict> v{{"1", "A", true}, {"2", "A", false}, {"3", "B", true}};
    auto r = mca(v);
    EXPECT_EQ(r.mca, 0.75);
    EXPECT_EQ(r.per_class.at("A").accuracy(), 0.5);
    EXPECT_EQ(r.per_class.at("B").accuracy(), 1.0);
}

TEST(Mca, ImbalanceAndEmpty) {
    std::vector<LabeledVerdict> v{{"x", "A", true}};
    for (int i = 0; i < 1000; ++i) v.push_back({"y" + std::to_string(i), "B", true});
    EXPECT_EQ(mca(v).mca, 1.0);
    EXPECT_EQ(mca(std::vector<LabeledVerdict>{}).mca, 0.0);
    std::map<ActivityLabel, ClassTally> t{{"A", {2, 1}}, {"Z", {0, 0}}};
    EXPECT_EQ(mca_from_tallies(t).mca, 0.5);
}

TEST(Mca, InvariancesOnRandomFixtures) {
    std::mt19937_64 rng(31);
    for (int t = 0; t < 200; ++t) {
        std::uniform_int_distribution<int> lab(0, 5), n(1, 40);
        std::bernoulli_distribution ok(0.6);
        std::vector<LabeledVerdict> v;
        std::vector<std::pair<std::string, bool>> plain;
        for (int i = 0, k = n(rng); i < k; ++i) {
            v.push_back({"v" + std::to_string(i), "L" + std::to_string(lab(rng)), ok(rng)});
            plain.emplace_back(v.back().label, v.back().correct);
        }
        double base = mca(v).mca;
        EXPECT_NEAR(base, oracle::mean_class_accuracy(plain), 1e-12);

        auto shuffled = v;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        EXPECT_EQ(mca(shuffled).mca, base);

        auto doubled = v;
        doubled.insert(doubled.end(), v.begin(), v.end());
        EXPECT_EQ(mca(doubled).mca, base);

        auto relabeled = v;
        for (auto& x : relabeled) x.label = "renamed_" + x.label;
        EXPECT_NEAR(mca(relabeled).mca, base, 1e-12);

        // Concatenation equals merged tallies.
        std::vector<LabeledVerdict> a(v.begin(), v.begin() + static_cast<long>(v.size() / 2));
        std::vector<LabeledVerdict> b(v.begin() + static_cast<long>(v.size() / 2), v.end());
        auto ta = mca(a).per_class;
        for (const auto& [l, tb] : mca(b).per_class) {
            ta[l].total += tb.total;
            ta[l].correct += tb.correct;
        }
        EXPECT_EQ(mca_from_tallies(ta).mca, base);
    }
}

TEST(ProtocolNames, RoundTrip) {
    for (auto p : {Protocol::CS, Protocol::CV1, Protocol::CV2}) EXPECT_EQ(protocol_from_string(to_string(p)), p);
    EXPECT_FALSE(protocol_from_string("CV3").has_value());
}
