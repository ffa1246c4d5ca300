#include <catch_amalgamated.hpp>

#include "igk/graph.hpp"
#include "igk/rng.hpp"
#include "igk/wl.hpp"
#include "oracle.hpp"

using namespace igk;

namespace {

LabeledGraph path(std::size_t n) { return LabeledGraph::from_edges(n, detail::path_edges(n), {}); }
LabeledGraph cycle(std::size_t n) { return LabeledGraph::from_edges(n, detail::cycle_edges(n), {}); }

}  // namespace

TEST_CASE("Histogram construction") {
    const std::vector<Color> c{3, 1, 3, 3, 2};
    const auto h = Histogram::of(c);
    CHECK(h.support() == 3);
    CHECK(h.total() == 5);
    CHECK(h.count(3) == 3);
    CHECK(h.count(7) == 0);
    CHECK(Histogram::from_counts({{3, 2}, {1, 1}, {3, 1}, {2, 1}, {9, 0}}) == h);
}

TEST_CASE("path of three nodes splits ends from the middle") {
    ColorDictionary dict;
    const auto seq = refine(path(3), 2, dict, true);
    REQUIRE(seq.depth() == 2);
    const auto& c1 = seq.colorings[1];
    CHECK(c1[0] == c1[2]);
    CHECK(c1[0] != c1[1]);
    CHECK(seq.histograms[1].support() == 2);
    CHECK(seq.histograms[2].support() == 2);
}

TEST_CASE("regular graphs stay uniformly colored") {
    ColorDictionary dict;
    const auto seq = refine(cycle(6), 4, dict, true);
    for (const auto& h : seq.histograms) CHECK(h.support() == 1);
}

TEST_CASE("refine rejects zero iterations") {
    ColorDictionary dict;
    CHECK_THROWS_AS(refine(path(3), 0, dict, true), InvalidInput);
}

TEST_CASE("refinement never merges color classes") {
    SyntheticSpec spec;
    spec.family = Family::erdos_renyi;
    spec.sizes = {15};
    spec.count = 10;
    spec.edge_probability = 0.25;
    const auto c = generate_synthetic(spec, 3);
    const auto seqs = refine_collection(c, 5, true);
    for (const auto& s : seqs)
        for (std::size_t h = 1; h <= s.depth(); ++h) {
            CHECK(s.histograms[h].support() >= s.histograms[h - 1].support());
            for (std::size_t u = 0; u < s.colorings[h].size(); ++u)
                for (std::size_t v = 0; v < s.colorings[h].size(); ++v)
                    if (s.colorings[h][u] == s.colorings[h][v]) CHECK(s.colorings[h - 1][u] == s.colorings[h - 1][v]);
        }
}

TEST_CASE("shared dictionary colors agree with unfolding trees across graphs") {
    SyntheticSpec spec;
    spec.family = Family::er_vs_ba;
    spec.sizes = {6, 7};
    spec.count = 6;
    const auto c = generate_synthetic(spec, 21);
    const std::size_t depth = 3;
    const auto seqs = refine_collection(c, depth, true);
    std::vector<std::vector<std::vector<std::string>>> trees;
    for (const auto& g : c.graphs) trees.push_back(oracle::unfolding_trees(g, depth));
    for (std::size_t h = 0; h <= depth; ++h)
        for (std::size_t a = 0; a < c.size(); ++a)
            for (std::size_t b = 0; b < c.size(); ++b)
                for (std::size_t u = 0; u < c.graphs[a].node_count(); ++u)
                    for (std::size_t v = 0; v < c.graphs[b].node_count(); ++v)
                        CHECK((seqs[a].colorings[h][u] == seqs[b].colorings[h][v]) ==
                              (trees[a][h][u] == trees[b][h][v]));
}

TEST_CASE("histograms are invariant under node permutation") {
    SyntheticSpec spec;
    spec.family = Family::erdos_renyi;
    spec.sizes = {12};
    spec.count = 1;
    spec.edge_probability = 0.3;
    const auto c = generate_synthetic(spec, 5);
    Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<std::size_t> perm(12);
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        GraphCollection pair{{c.graphs[0], c.graphs[0].permuted(perm)}, 1, "pair", {0}};
        const auto seqs = refine_collection(pair, 4, true);
        for (std::size_t h = 0; h <= 4; ++h) CHECK(seqs[0].histograms[h] == seqs[1].histograms[h]);
    }
}

TEST_CASE("ignoring node labels starts from a uniform coloring") {
    const auto g = LabeledGraph::from_edges(3, detail::path_edges(3), {5, 6, 7});
    ColorDictionary with, without;
    CHECK(refine(g, 1, with, true).histograms[0].support() == 3);
    CHECK(refine(g, 1, without, false).histograms[0].support() == 1);
}

TEST_CASE("refine_collection is deterministic") {
    SyntheticSpec spec;
    spec.family = Family::er_vs_ba;
    spec.sizes = {8};
    spec.count = 8;
    const auto c = generate_synthetic(spec, 2);
    const auto a = refine_collection(c, 3, true);
    const auto b = refine_collection(c, 3, true);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(a[i].colorings == b[i].colorings);
}
