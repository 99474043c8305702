#pragma once

// Independent reference computations. Written from the definitions, not
// from the library code, and deliberately naive.

#include <harcap/dataset.hpp>
#include <harcap/keyframe.hpp>

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <vector>

namespace oracle {

inline double entropy_bits(const std::vector<std::uint8_t>& px) {
    std::map<int, long> counts;
    for (auto p : px) ++counts[p];
    long double h = 0.0L;
    for (const auto& [_, c] : counts) {
        long double p = static_cast<long double>(c) / static_cast<long double>(px.size());
        h -= p * std::log2(p);
    }
    return static_cast<double>(h);
}

inline double mean_intensity(const std::vector<std::uint8_t>& px) {
    long long s = 0;
    for (auto p : px) s += p;
    return static_cast<double>(s) / static_cast<double>(px.size());
}

inline double mean_abs_difference(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
    long long s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(int(a[i]) - int(b[i]));
    return static_cast<double>(s) / static_cast<double>(a.size());
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    long double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<long double>(a[i]) * b[i];
        na += static_cast<long double>(a[i]) * a[i];
        nb += static_cast<long double>(b[i]) * b[i];
    }
    return static_cast<double>(dot / (std::sqrt(na) * std::sqrt(nb)));
}

/// Sum of squared distances to cluster means for one labelling.
inline double partition_cost(const std::vector<harcap::HistogramFeature>& x,
                             const std::vector<int>& label, int k) {
    double total = 0.0;
    for (int c = 0; c < k; ++c) {
        std::vector<long double> mean(harcap::kHistogramBins, 0.0L);
        int n = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (label[i] != c) continue;
            ++n;
            for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += x[i][d];
        }
        if (n == 0) continue;
        for (auto& m : mean) m /= n;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (label[i] != c) continue;
            for (std::size_t d = 0; d < mean.size(); ++d) {
                long double diff = x[i][d] - mean[d];
                total += static_cast<double>(diff * diff);
            }
        }
    }
    return total;
}

/// Minimum within-cluster sum of squares over all k^n labellings.
inline double optimal_inertia(const std::vector<harcap::HistogramFeature>& x, int k) {
    const std::size_t n = x.size();
    std::vector<int> label(n, 0);
    double best = std::numeric_limits<double>::infinity();
    while (true) {
        best = std::min(best, partition_cost(x, label, k));
        std::size_t i = 0;
        while (i < n && ++label[i] == k) label[i++] = 0;
        if (i == n) break;
    }
    return best;
}

/// Per-class accuracy averaged over classes that have verdicts.
inline double mean_class_accuracy(const std::vector<std::pair<std::string, bool>>& verdicts) {
    std::map<std::string, std::pair<long, long>> t;  // label -> (correct, total)
    for (const auto& [label, ok] : verdicts) {
        t[label].second += 1;
        t[label].first += ok ? 1 : 0;
    }
    if (t.empty()) return 0.0;
    double s = 0.0;
    for (const auto& [_, ct] : t) s += static_cast<double>(ct.first) / static_cast<double>(ct.second);
    return s / static_cast<double>(t.size());
}

inline std::set<std::string> labels_on_both_views(const std::vector<harcap::VideoRecord>& recs) {
    std::set<std::string> one, two, both;
    for (const auto& r : recs) {
        if (r.camera_id == 1) one.insert(r.label);
        if (r.camera_id == 2) two.insert(r.label);
    }
    for (const auto& l : one) {
        if (two.count(l)) both.insert(l);
    }
    return both;
}

}  // namespace oracle
