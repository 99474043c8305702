#pragma once

// Keyframe selection: per-frame scores (difference to previous frame,
// brightness, entropy) filter candidates, then K-means over 64-bin intensity
// histograms picks one representative frame per cluster.

#include <harcap/error.hpp>
#include <harcap/rng.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace harcap {

/// 8-bit grayscale still, row-major.
struct Frame {
    std::size_t index = 0;
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    Frame() = default;
    Frame(std::size_t idx, int w, int h, std::vector<std::uint8_t> px)
        : index(idx), width(w), height(h), pixels(std::move(px)) {
        if (w <= 0 || h <= 0) throw PreconditionViolation("frame dimensions must be positive");
        if (pixels.size() != static_cast<std::size_t>(w) * static_cast<std::size_t>(h)) {
            throw PreconditionViolation("frame pixel count does not match width*height");
        }
    }

    std::size_t size() const { return pixels.size(); }
};

/// ITU-R BT.601 luma, rounded.
inline std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    double y = 0.299 * r + 0.587 * g + 0.114 * b;
    return static_cast<std::uint8_t>(std::clamp(std::lround(y), 0L, 255L));
}

inline Frame frame_from_rgb(std::size_t index, int width, int height,
                            std::span<const std::uint8_t> rgb) {
    if (rgb.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3) {
        throw PreconditionViolation("RGB buffer size does not match dimensions");
    }
    std::vector<std::uint8_t> gray(rgb.size() / 3);
    for (std::size_t i = 0; i < gray.size(); ++i) {
        gray[i] = luma(rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]);
    }
    return Frame(index, width, height, std::move(gray));
}

struct FrameScore {
    double diff = std::numeric_limits<double>::infinity();  // +inf for the first frame
    double brightness = 0.0;
    double entropy = 0.0;
};

struct KeyframeConfig {
    double min_diff = 2.0;
    double min_brightness = 10.0;
    double max_brightness = 245.0;
    double min_entropy = 0.5;
    std::uint64_t seed = 0;
};

constexpr std::size_t kHistogramBins = 64;
using HistogramFeature = std::array<double, kHistogramBins>;

struct ClusterModel {
    std::size_t k = 0;
    std::vector<HistogramFeature> centroids;
    std::vector<std::size_t> assignments;
    double inertia = 0.0;
    std::vector<double> inertia_history;  // after each assignment step or transfer sweep
    int iterations = 0;
};

// ---------------------------------------------------------------------------
// Scores

inline double frame_difference(const Frame& a, const Frame& b) {
    if (a.width != b.width || a.height != b.height) {
        throw DimensionMismatch("frame_difference: " + std::to_string(a.width) + "x" +
                                std::to_string(a.height) + " vs " + std::to_string(b.width) +
                                "x" + std::to_string(b.height));
    }
    if (a.pixels.empty()) return 0.0;
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        sum += static_cast<std::uint64_t>(std::abs(int(a.pixels[i]) - int(b.pixels[i])));
    }
    return static_cast<double>(sum) / static_cast<double>(a.pixels.size());
}

inline double brightness(const Frame& f) {
    if (f.pixels.empty()) return 0.0;
    std::uint64_t sum = 0;
    for (auto p : f.pixels) sum += p;
    return static_cast<double>(sum) / static_cast<double>(f.pixels.size());
}

inline std::array<std::uint64_t, 256> intensity_counts(const Frame& f) {
    std::array<std::uint64_t, 256> counts{};
    for (auto p : f.pixels) ++counts[p];
    return counts;
}

/// Shannon entropy (bits) of the 256-bin intensity distribution.
inline double entropy(const Frame& f) {
    if (f.pixels.empty()) return 0.0;
    const auto counts = intensity_counts(f);
    const double n = static_cast<double>(f.pixels.size());
    double h = 0.0;
    for (auto c : counts) {
        if (c == 0) continue;
        double p = static_cast<double>(c) / n;
        h -= p * std::log2(p);
    }
    return std::clamp(h, 0.0, 8.0);
}

inline std::vector<FrameScore> score_frames(std::span<const Frame> frames) {
    std::vector<FrameScore> scores(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (i > 0) scores[i].diff = frame_difference(frames[i - 1], frames[i]);
        scores[i].brightness = brightness(frames[i]);
        scores[i].entropy = entropy(frames[i]);
    }
    return scores;
}

/// Positions (into `frames`) passing all thresholds; all positions when none do.
inline std::vector<std::size_t> candidate_filter(std::span<const Frame> frames,
                                                 const KeyframeConfig& cfg = {}) {
    if (frames.empty()) throw PreconditionViolation("candidate_filter: no frames");
    const auto scores = score_frames(frames);
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const auto& s = scores[i];
        if (s.diff >= cfg.min_diff && s.brightness >= cfg.min_brightness &&
            s.brightness <= cfg.max_brightness && s.entropy >= cfg.min_entropy) {
            keep.push_back(i);
        }
    }
    if (keep.empty()) {
        keep.resize(frames.size());
        for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
    }
    return keep;
}

/// L1-normalized histogram; bin j covers intensities [4j, 4j+4).
inline HistogramFeature histogram64(const Frame& f) {
    HistogramFeature h{};
    if (f.pixels.empty()) {
        h[0] = 1.0;
        return h;
    }
    for (auto p : f.pixels) h[p / 4] += 1.0;
    const double n = static_cast<double>(f.pixels.size());
    for (auto& b : h) b /= n;
    return h;
}

// ---------------------------------------------------------------------------
// K-means

inline double squared_distance(const HistogramFeature& a, const HistogramFeature& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < kHistogramBins; ++i) {
        double t = a[i] - b[i];
        d += t * t;
    }
    return d;
}

namespace detail {

// k-means++ seeding driven by a counter-based stream; positive-weight points
// only, falling back to the lowest unchosen index when all weights vanish.
inline std::vector<std::size_t> kmeanspp_seeds(std::span<const HistogramFeature> x,
                                               std::size_t k, const CounterRng& rng) {
    const std::size_t n = x.size();
    std::vector<std::size_t> chosen;
    std::vector<bool> taken(n, false);
    std::uint64_t counter = 0;

    chosen.push_back(static_cast<std::size_t>(rng.below(counter++, n)));
    taken[chosen[0]] = true;
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(x[i], x[chosen[0]]);

    while (chosen.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!taken[i]) total += d2[i];
        }
        std::size_t pick = n;
        if (total > 0.0) {
            const double target = rng.uniform(counter++) * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (taken[i] || d2[i] <= 0.0) continue;
                acc += d2[i];
                pick = i;
                if (acc > target) break;
            }
        } else {
            ++counter;
        }
        if (pick == n) {
            pick = static_cast<std::size_t>(std::find(taken.begin(), taken.end(), false) -
                                            taken.begin());
        }
        chosen.push_back(pick);
        taken[pick] = true;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], squared_distance(x[i], x[pick]));
        }
    }
    return chosen;
}

inline double assign(std::span<const HistogramFeature> x,
                     const std::vector<HistogramFeature>& centroids,
                     std::vector<std::size_t>& assignments) {
    double inertia = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::size_t best = 0;
        double best_d = squared_distance(x[i], centroids[0]);
        for (std::size_t c = 1; c < centroids.size(); ++c) {
            double d = squared_distance(x[i], centroids[c]);
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        assignments[i] = best;
        inertia += best_d;
    }
    return inertia;
}

inline void update_centroids(std::span<const HistogramFeature> x,
                             const std::vector<std::size_t>& assignments,
                             std::vector<HistogramFeature>& centroids) {
    std::vector<std::size_t> counts(centroids.size(), 0);
    std::vector<HistogramFeature> sums(centroids.size(), HistogramFeature{});
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto c = assignments[i];
        ++counts[c];
        for (std::size_t b = 0; b < kHistogramBins; ++b) sums[c][b] += x[i][b];
    }
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        if (counts[c] == 0) continue;
        for (std::size_t b = 0; b < kHistogramBins; ++b) {
            centroids[c][b] = sums[c][b] / static_cast<double>(counts[c]);
        }
    }
}

// Moves the point farthest from its centroid into each empty cluster.
// Returns the resulting inertia.
inline double reseed_empty(std::span<const HistogramFeature> x,
                           std::vector<HistogramFeature>& centroids,
                           std::vector<std::size_t>& assignments, double inertia) {
    const std::size_t k = centroids.size();
    for (std::size_t c = 0; c < k; ++c) {
        if (std::find(assignments.begin(), assignments.end(), c) != assignments.end()) continue;
        std::vector<std::size_t> sizes(k, 0);
        for (auto a : assignments) ++sizes[a];
        std::size_t far = x.size();
        double far_d = -1.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (sizes[assignments[i]] < 2) continue;  // never empty another cluster
            double d = squared_distance(x[i], centroids[assignments[i]]);
            if (d > far_d) {
                far_d = d;
                far = i;
            }
        }
        if (far == x.size()) continue;
        inertia -= far_d;
        assignments[far] = c;
        centroids[c] = x[far];
    }
    return std::max(inertia, 0.0);
}

// One sweep of single-point transfers: a point moves to another cluster when
// that lowers the total inertia (sizes included, so the centroid shifts are
// accounted for). Clusters never empty. Returns whether anything moved.
inline bool transfer_pass(std::span<const HistogramFeature> x, std::vector<std::size_t>& assignments,
                          std::vector<HistogramFeature>& centroids) {
    std::vector<double> sizes(centroids.size(), 0.0);
    for (auto a : assignments) sizes[a] += 1.0;
    bool moved = false;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto from = assignments[i];
        if (sizes[from] < 2.0) continue;
        const double removal = sizes[from] / (sizes[from] - 1.0) * squared_distance(x[i], centroids[from]);
        std::size_t to = from;
        double best = -1e-12 * std::max(1.0, removal);
        for (std::size_t c = 0; c < centroids.size(); ++c) {
            if (c == from) continue;
            double delta = sizes[c] / (sizes[c] + 1.0) * squared_distance(x[i], centroids[c]) - removal;
            if (delta < best) {
                best = delta;
                to = c;
            }
        }
        if (to == from) continue;
        assignments[i] = to;
        sizes[from] -= 1.0;
        sizes[to] += 1.0;
        update_centroids(x, assignments, centroids);
        moved = true;
    }
    return moved;
}

inline double total_inertia(std::span<const HistogramFeature> x, const std::vector<HistogramFeature>& centroids,
                            const std::vector<std::size_t>& assignments) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += squared_distance(x[i], centroids[assignments[i]]);
    return s;
}

}  // namespace detail

/// Lloyd's algorithm with seeded k-means++ initialization. Stops when the
/// assignment is stable or after `max_iterations` rounds, then polishes the
/// result with single-point transfer sweeps, which escape some Lloyd fixed
/// points.
inline ClusterModel kmeans(std::span<const HistogramFeature> features, std::size_t k,
                           std::uint64_t seed, int max_iterations = 100) {
    if (k == 0) throw PreconditionViolation("kmeans: k must be positive");
    if (k > features.size()) {
        throw KTooLarge("kmeans: k=" + std::to_string(k) + " exceeds " +
                        std::to_string(features.size()) + " features");
    }
    const CounterRng rng(seed);
    ClusterModel m;
    m.k = k;
    for (auto idx : detail::kmeanspp_seeds(features, k, rng)) m.centroids.push_back(features[idx]);
    m.assignments.assign(features.size(), 0);

    std::vector<std::size_t> previous;
    for (int it = 0; it < max_iterations; ++it) {
        double inertia = detail::assign(features, m.centroids, m.assignments);
        inertia = detail::reseed_empty(features, m.centroids, m.assignments, inertia);
        m.inertia_history.push_back(inertia);
        m.iterations = it + 1;
        if (m.assignments == previous) break;
        previous = m.assignments;
        detail::update_centroids(features, m.assignments, m.centroids);
    }
    detail::update_centroids(features, m.assignments, m.centroids);
    for (int sweep = 0; sweep < max_iterations; ++sweep) {
        if (!detail::transfer_pass(features, m.assignments, m.centroids)) break;
        m.inertia_history.push_back(detail::total_inertia(features, m.centroids, m.assignments));
    }
    m.inertia = detail::total_inertia(features, m.centroids, m.assignments);
    return m;
}

/// Ascending frame positions of at most `k` keyframes. Never empty for
/// non-empty input.
inline std::vector<std::size_t> select_keyframes(std::span<const Frame> frames, std::size_t k,
                                                 const KeyframeConfig& cfg = {}) {
    if (frames.empty()) throw PreconditionViolation("select_keyframes: no frames");
    if (k == 0) throw PreconditionViolation("select_keyframes: k must be positive");

    const auto candidates = candidate_filter(frames, cfg);
    std::vector<HistogramFeature> features;
    features.reserve(candidates.size());
    for (auto i : candidates) features.push_back(histogram64(frames[i]));

    const auto model = kmeans(features, std::min(k, candidates.size()), cfg.seed);
    std::vector<std::size_t> picks;
    for (const auto& centroid : model.centroids) {
        std::size_t best = 0;
        double best_d = squared_distance(features[0], centroid);
        for (std::size_t j = 1; j < features.size(); ++j) {
            double d = squared_distance(features[j], centroid);
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        picks.push_back(candidates[best]);
    }
    std::sort(picks.begin(), picks.end());
    picks.erase(std::unique(picks.begin(), picks.end()), picks.end());
    return picks;
}

}  // namespace harcap
