// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "igk/consistency_loss.hpp"
#include "igk/error.hpp"
#include "igk/matrix.hpp"

namespace igk {

/// 1-based ranks; tied values share the average of their positions.
inline std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j < idx.size() && v[idx[j]] == v[idx[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t t = i; t < j; ++t) ranks[idx[t]] = r;
        i = j;
    }
    return ranks;
}

/// Spearman's rho as the Pearson correlation of average ranks. Undefined
/// (nullopt) when either input is constant.
inline std::optional<double> spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InvalidInput("spearman inputs differ in length");
    if (a.size() < 2) throw InvalidInput("spearman needs at least two values");
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return std::nullopt;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

struct RhoDistribution {
    double min = 0.0;
    double median = 0.0;
    double max = 0.0;
};

struct LayerCorrelationReport {
    /// mean_rho[h] compares layer h with layer h + 1 (0-indexed); empty when
    /// every row of that pair was degenerate.
    std::vector<std::optional<double>> mean_rho;
    std::vector<std::optional<RhoDistribution>> distribution;
    std::optional<double> overall;
    /// Rows skipped because one side was constant.
    std::size_t excluded_rows = 0;
};

/// For each consecutive layer pair, ranks each graph's distances to all other
/// graphs in both layers and averages the per-graph rho; `overall` is the mean
/// over layer pairs.
inline LayerCorrelationReport layer_rank_correlation(std::span<const Matrix> layers) {
    if (layers.size() < 2) throw InvalidInput("rank correlation needs at least two layers");
    const std::size_t n = layers.front().rows();
    if (n < 3) throw InvalidInput("rank correlation needs at least three graphs");

    std::vector<Matrix> dist;
    for (const auto& l : layers) {
        if (l.rows() != n) throw InvalidInput("layers disagree on the number of graphs");
        dist.push_back(cosine_distance_matrix(l));
    }

    LayerCorrelationReport r;
    std::vector<double> layer_means;
    std::vector<double> row_a(n - 1), row_b(n - 1);
    for (std::size_t h = 0; h + 1 < layers.size(); ++h) {
        std::vector<double> rhos;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t t = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                row_a[t] = dist[h](i, j);
                row_b[t] = dist[h + 1](i, j);
                ++t;
            }
            if (auto rho = spearman(row_a, row_b)) rhos.push_back(*rho);
            else ++r.excluded_rows;
        }
        if (rhos.empty()) {
            r.mean_rho.push_back(std::nullopt);
            r.distribution.push_back(std::nullopt);
            continue;
        }
        const double mean = std::accumulate(rhos.begin(), rhos.end(), 0.0) / static_cast<double>(rhos.size());
        r.mean_rho.push_back(mean);
        layer_means.push_back(mean);
        std::sort(rhos.begin(), rhos.end());
        const std::size_t mid = rhos.size() / 2;
        const double median = rhos.size() % 2 ? rhos[mid] : 0.5 * (rhos[mid - 1] + rhos[mid]);
        r.distribution.push_back(RhoDistribution{rhos.front(), median, rhos.back()});
    }
    if (!layer_means.empty())
        r.overall = std::accumulate(layer_means.begin(), layer_means.end(), 0.0) /
                    static_cast<double>(layer_means.size());
    return r;
}

/// Majority vote among the k training graphs most similar under `gram`.
/// Neighbors are ordered by decreasing similarity, then training index; vote
/// ties go to the smallest class.
inline std::vector<int> knn_classify(const Matrix& gram, std::span<const std::size_t> train_idx,
                                     std::span<const int> train_labels,
                                     std::span<const std::size_t> test_idx, std::size_t k) {
    if (train_idx.empty()) throw InvalidK("training set is empty");
    if (k < 1 || k > train_idx.size()) throw InvalidK("k must lie in [1, training set size]");
    if (train_labels.size() != train_idx.size()) throw InvalidInput("one label per training graph required");

    std::vector<int> out;
    out.reserve(test_idx.size());
    std::vector<std::size_t> order(train_idx.size());
    for (auto t : test_idx) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double sa = gram(t, train_idx[a]), sb = gram(t, train_idx[b]);
            if (sa != sb) return sa > sb;
            return train_idx[a] < train_idx[b];
        });
        std::map<int, std::size_t> votes;
        for (std::size_t r = 0; r < k; ++r) ++votes[train_labels[order[r]]];
        int best = votes.begin()->first;
        std::size_t best_votes = 0;
        for (const auto& [cls, v] : votes)
            if (v > best_votes) {
                best = cls;
                best_votes = v;
            }
        out.push_back(best);
    }
    return out;
}

inline double accuracy(std::span<const int> pred, std::span<const int> truth) {
    if (pred.size() != truth.size() || pred.empty())
        throw InvalidInput("accuracy needs two non-empty vectors of equal length");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == truth[i];
    return static_cast<double>(hit) / static_cast<double>(pred.size());
}

}  // namespace igk
