// SPDX-License-Identifier: Apache-2.0
// Dense reference implementation of the WL kernels used as a test oracle.
// Colors are canonical strings of the full unfolding tree, so no color table
// is shared with the library.
#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "igk/graph.hpp"

namespace oracle {

/// tree[h][v]: canonical string of the depth-h unfolding tree rooted at v.
inline std::vector<std::vector<std::string>> unfolding_trees(const igk::LabeledGraph& g, std::size_t depth,
                                                             bool use_labels = true) {
    std::vector<std::vector<std::string>> tree(depth + 1, std::vector<std::string>(g.node_count()));
    for (std::size_t v = 0; v < g.node_count(); ++v)
        tree[0][v] = use_labels ? std::to_string(g.node_labels()[v]) : "*";
    for (std::size_t h = 1; h <= depth; ++h)
        for (std::size_t v = 0; v < g.node_count(); ++v) {
            std::vector<std::string> kids;
            for (auto u : g.neighbors(v)) kids.push_back(tree[h - 1][u]);
            std::sort(kids.begin(), kids.end());
            std::string s = "(" + tree[h - 1][v] + ":";
            for (const auto& k : kids) s += k + ",";
            tree[h][v] = s + ")";
        }
    return tree;
}

/// Dense count vectors over the union vocabulary of both graphs, per iteration.
struct DensePair {
    std::vector<std::vector<std::int64_t>> a, b;
};

inline DensePair dense_features(const igk::LabeledGraph& x, const igk::LabeledGraph& y, std::size_t depth) {
    const auto tx = unfolding_trees(x, depth), ty = unfolding_trees(y, depth);
    DensePair d;
    for (std::size_t h = 0; h <= depth; ++h) {
        std::set<std::string> vocab(tx[h].begin(), tx[h].end());
        vocab.insert(ty[h].begin(), ty[h].end());
        std::map<std::string, std::size_t> pos;
        for (const auto& s : vocab) pos.emplace(s, pos.size());
        std::vector<std::int64_t> fa(vocab.size(), 0), fb(vocab.size(), 0);
        for (const auto& s : tx[h]) ++fa[pos[s]];
        for (const auto& s : ty[h]) ++fb[pos[s]];
        d.a.push_back(fa);
        d.b.push_back(fb);
    }
    return d;
}

/// Sum over iterations first..h of the dot product of dense count vectors.
inline std::int64_t subtree(const igk::LabeledGraph& x, const igk::LabeledGraph& y, std::size_t h,
                            std::size_t first = 1) {
    const auto d = dense_features(x, y, h);
    std::int64_t k = 0;
    for (std::size_t i = first; i <= h; ++i)
        for (std::size_t c = 0; c < d.a[i].size(); ++c) k += d.a[i][c] * d.b[i][c];
    return k;
}

/// Sum over iterations first..h of the elementwise minimum (unit weights).
inline std::int64_t wloa(const igk::LabeledGraph& x, const igk::LabeledGraph& y, std::size_t h,
                         std::size_t first = 1) {
    const auto d = dense_features(x, y, h);
    std::int64_t k = 0;
    for (std::size_t i = first; i <= h; ++i)
        for (std::size_t c = 0; c < d.a[i].size(); ++c) k += std::min(d.a[i][c], d.b[i][c]);
    return k;
}

}  // namespace oracle
