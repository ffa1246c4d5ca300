// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "igk/error.hpp"
#include "igk/graph.hpp"

namespace igk {

using Color = std::uint32_t;
using Coloring = std::vector<Color>;

/// Sparse color -> count map, stored sorted by color.
class Histogram {
public:
    using Entry = std::pair<Color, std::int64_t>;

    Histogram() = default;

    static Histogram of(std::span<const Color> coloring) {
        std::vector<Color> sorted(coloring.begin(), coloring.end());
        std::sort(sorted.begin(), sorted.end());
        Histogram h;
        for (std::size_t i = 0; i < sorted.size();) {
            std::size_t j = i;
            while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
            h.entries_.emplace_back(sorted[i], static_cast<std::int64_t>(j - i));
            i = j;
        }
        return h;
    }

    /// Builds from arbitrary (color, count) pairs; repeated colors are summed
    /// and zero counts dropped.
    static Histogram from_counts(std::vector<Entry> entries) {
        std::sort(entries.begin(), entries.end());
        Histogram h;
        for (const auto& [c, n] : entries) {
            if (n == 0) continue;
            if (!h.entries_.empty() && h.entries_.back().first == c)
                h.entries_.back().second += n;
            else
                h.entries_.emplace_back(c, n);
        }
        return h;
    }

    std::span<const Entry> entries() const noexcept { return entries_; }
    std::size_t support() const noexcept { return entries_.size(); }

    std::int64_t total() const noexcept {
        std::int64_t t = 0;
        for (const auto& e : entries_) t += e.second;
        return t;
    }

    std::int64_t count(Color c) const {
        auto it = std::lower_bound(entries_.begin(), entries_.end(), Entry{c, 0},
                                   [](const Entry& a, const Entry& b) { return a.first < b.first; });
        return it != entries_.end() && it->first == c ? it->second : 0;
    }

    bool operator==(const Histogram&) const = default;

private:
    std::vector<Entry> entries_;
};

/// Injective map from refinement signatures to colors, shared by every graph
/// of a collection so that color ids are comparable across graphs.
class ColorDictionary {
public:
    /// Color for an initial node label (get-or-insert).
    Color label_color(Label label) {
        auto [it, inserted] = labels_.try_emplace(label, next_);
        if (inserted) ++next_;
        return it->second;
    }

    /// Shared color used when node labels are ignored.
    Color uniform_color() { return label_color(std::numeric_limits<Label>::min()); }

    /// Color for the signature (own, neighbor multiset); `sorted_neighbors`
    /// must be sorted ascending.
    Color refine(Color own, std::span<const Color> sorted_neighbors) {
        key_.clear();
        key_.push_back(own);
        key_.insert(key_.end(), sorted_neighbors.begin(), sorted_neighbors.end());
        auto [it, inserted] = signatures_.try_emplace(key_, next_);
        if (inserted) ++next_;
        return it->second;
    }

    Color next_free_color() const noexcept { return next_; }
    std::size_t label_count() const noexcept { return labels_.size(); }
    std::size_t signature_count() const noexcept { return signatures_.size(); }

private:
    struct KeyHash {
        std::size_t operator()(const std::vector<Color>& v) const noexcept {
            std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ v.size();
            for (Color c : v) {
                h ^= c + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
            }
            return static_cast<std::size_t>(h);
        }
    };

    std::map<Label, Color> labels_;
    std::unordered_map<std::vector<Color>, Color, KeyHash> signatures_;
    std::vector<Color> key_;
    Color next_ = 0;
};

/// Colorings of one graph for iterations 0..depth with their histograms.
struct ColoringSequence {
    std::vector<Coloring> colorings;
    std::vector<Histogram> histograms;

    std::size_t depth() const noexcept { return colorings.empty() ? 0 : colorings.size() - 1; }
};

inline Coloring initial_coloring(const LabeledGraph& g, ColorDictionary& dict,
                                 bool use_node_labels) {
    Coloring c(g.node_count());
    if (!use_node_labels) {
        std::fill(c.begin(), c.end(), dict.uniform_color());
        return c;
    }
    for (std::size_t v = 0; v < g.node_count(); ++v) c[v] = dict.label_color(g.node_labels()[v]);
    return c;
}

/// One WL round. New colors are assigned in node index order.
inline Coloring refine_step(std::span<const Color> coloring, const LabeledGraph& g,
                            ColorDictionary& dict) {
    Coloring next(g.node_count());
    std::vector<Color> nbr;
    for (std::size_t v = 0; v < g.node_count(); ++v) {
        nbr.clear();
        for (NodeId u : g.neighbors(v)) nbr.push_back(coloring[u]);
        std::sort(nbr.begin(), nbr.end());
        next[v] = dict.refine(coloring[v], nbr);
    }
    return next;
}

/// Refines a single graph to depth `iterations`. Always stores iterations + 1
/// colorings, even after the partition stabilizes.
inline ColoringSequence refine(const LabeledGraph& g, std::size_t iterations,
                               ColorDictionary& dict, bool use_node_labels) {
    if (iterations < 1) throw InvalidInput("refinement depth must be at least 1");
    ColoringSequence s;
    s.colorings.push_back(initial_coloring(g, dict, use_node_labels));
    for (std::size_t i = 0; i < iterations; ++i)
        s.colorings.push_back(refine_step(s.colorings.back(), g, dict));
    for (const auto& c : s.colorings) s.histograms.push_back(Histogram::of(c));
    return s;
}

/// Refines every graph of a collection under one dictionary. Seeds all graphs
/// first, then runs each round across the whole collection, so label colors
/// precede refined colors and ids depend only on (graph order, node order).
inline std::vector<ColoringSequence> refine_collection(const GraphCollection& c,
                                                       std::size_t iterations,
                                                       bool use_node_labels,
                                                       ColorDictionary& dict) {
    if (iterations < 1) throw InvalidInput("refinement depth must be at least 1");
    std::vector<ColoringSequence> out(c.size());
    for (std::size_t g = 0; g < c.size(); ++g)
        out[g].colorings.push_back(initial_coloring(c.graphs[g], dict, use_node_labels));
    for (std::size_t i = 0; i < iterations; ++i)
        for (std::size_t g = 0; g < c.size(); ++g)
            out[g].colorings.push_back(refine_step(out[g].colorings.back(), c.graphs[g], dict));
    for (auto& s : out)
        for (const auto& col : s.colorings) s.histograms.push_back(Histogram::of(col));
    return out;
}

inline std::vector<ColoringSequence> refine_collection(const GraphCollection& c,
                                                       std::size_t iterations,
                                                       bool use_node_labels) {
    ColorDictionary dict;
    return refine_collection(c, iterations, use_node_labels, dict);
}

}  // namespace igk
