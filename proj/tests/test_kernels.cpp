#include <catch_amalgamated.hpp>

#include <filesystem>
#include <sstream>

#include "igk/consistency.hpp"
#include "igk/kernels.hpp"
#include "oracle.hpp"

using namespace igk;
using Catch::Approx;

namespace {

LabeledGraph path(std::size_t n) { return LabeledGraph::from_edges(n, detail::path_edges(n), {}); }
LabeledGraph cycle(std::size_t n) { return LabeledGraph::from_edges(n, detail::cycle_edges(n), {}); }

GraphCollection collection(std::vector<LabeledGraph> gs) {
    GraphCollection c{std::move(gs), 1, "test", {0}};
    return c;
}

GraphCollection small_random_graphs(std::uint64_t seed, std::size_t count) {
    Rng rng(seed);
    GraphCollection c{{}, 1, "small", {0}};
    for (std::size_t g = 0; g < count; ++g) {
        const std::size_t n = 1 + rng.below(6);
        std::vector<Edge> e;
        for (std::size_t u = 0; u < n; ++u)
            for (std::size_t v = u + 1; v < n; ++v)
                if (rng.bernoulli(0.45)) e.emplace_back(u, v);
        std::vector<Label> labels(n);
        for (auto& l : labels) l = static_cast<Label>(rng.below(3));
        c.graphs.push_back(LabeledGraph::from_edges(n, e, labels));
    }
    return c;
}

}  // namespace

TEST_CASE("histmin worked example") {
    enum : Color { a, b, c };
    const auto x = Histogram::from_counts({{a, 2}, {b, 2}, {c, 1}});
    const auto y = Histogram::from_counts({{a, 1}, {b, 2}, {c, 2}});
    CHECK(histmin(x, y) == 4);
    CHECK(histmin(x, x) == x.total());
    CHECK(histmin(x, Histogram::from_counts({{9, 5}})) == 0);
    CHECK(dot(x, y) == 2 + 4 + 2);
}

TEST_CASE("literal histogram example") {
    const std::vector<Histogram> a{Histogram{}, Histogram::from_counts({{0, 200}, {1, 4}})};
    const std::vector<Histogram> b{Histogram{}, Histogram::from_counts({{0, 4}, {1, 200}})};
    CHECK(subtree_kernel(a, b, 1) == 1600.0);
    CHECK(normalize(1600, 40016, 40016) == Approx(0.039984).margin(1e-6));
    CHECK(normalize(7, 7, 7) == 1.0);
    CHECK(normalize(0, 5, 7) == 0.0);
    CHECK_THROWS_AS(normalize(1, 0, 7), DegenerateKernel);
}

TEST_CASE("P3 versus C3 from uniform colors") {
    auto c = collection({path(3), cycle(3)});
    const auto seqs = refine_collection(c, 1, false);
    CHECK(subtree_kernel(seqs[0], seqs[1], 1) == 3.0);
    CHECK(wloa_kernel(seqs[0], seqs[1], 1, WeightFunction::constant_one()) == 1.0);
    KernelSpec spec;
    spec.kind = KernelKind::wl_subtree;
    spec.iterations = 1;
    spec.use_node_labels = false;
    const auto s = gram_series(c, spec);
    CHECK(s.at(1)(0, 1) == Approx(3.0 / std::sqrt(45.0)).epsilon(1e-12));
}

TEST_CASE("kernels match the dense unfolding-tree oracle") {
    const auto c = small_random_graphs(42, 25);
    const auto seqs = refine_collection(c, 3, true);
    for (std::size_t i = 0; i < c.size(); ++i)
        for (std::size_t j = i; j < c.size(); ++j)
            for (std::size_t h = 1; h <= 3; ++h) {
                CHECK(subtree_kernel(seqs[i], seqs[j], h) ==
                      static_cast<double>(oracle::subtree(c.graphs[i], c.graphs[j], h)));
                CHECK(wloa_kernel(seqs[i], seqs[j], h, WeightFunction::constant_one()) ==
                      static_cast<double>(oracle::wloa(c.graphs[i], c.graphs[j], h)));
                CHECK(subtree_kernel(seqs[i], seqs[j], h, true) ==
                      static_cast<double>(oracle::subtree(c.graphs[i], c.graphs[j], h, 0)));
            }
}

TEST_CASE("WLOA self-kernel equals node count times total weight") {
    const auto c = small_random_graphs(7, 12);
    const auto seqs = refine_collection(c, 6, true);
    for (const auto& omega : {WeightFunction::constant_one(), WeightFunction::linear()})
        for (std::size_t g = 0; g < c.size(); ++g)
            for (std::size_t h = 1; h <= 6; ++h) {
                double w = 0.0;
                for (std::size_t i = 1; i <= h; ++i) w += omega(i);
                CHECK(wloa_kernel(seqs[g], seqs[g], h, omega) == static_cast<double>(c.graphs[g].node_count()) * w);
            }
}

TEST_CASE("iteration zero uses the weight of iteration one") {
    const auto c = collection({path(4), cycle(4)});
    const auto seqs = refine_collection(c, 2, true);
    const auto lin = WeightFunction::linear();
    CHECK(lin(0) == 1.0);
    const double with0 = wloa_kernel(seqs[0], seqs[1], 2, lin, true);
    const double without = wloa_kernel(seqs[0], seqs[1], 2, lin, false);
    CHECK(with0 - without == static_cast<double>(histmin(seqs[0].histograms[0], seqs[1].histograms[0])));
}

TEST_CASE("weight function validation") {
    CHECK_NOTHROW(WeightFunction::table({1, 2, 2}).validate(3));
    CHECK_THROWS_AS(WeightFunction::table({2, 1}).validate(2), InvalidInput);
    CHECK_THROWS_AS(WeightFunction::table({-1, 1}).validate(2), InvalidInput);
    CHECK_THROWS_AS(WeightFunction::table({1}).validate(2), InvalidInput);
    KernelSpec spec;
    spec.iterations = 0;
    CHECK_THROWS_AS(spec.validate(), InvalidInput);
}

TEST_CASE("depth beyond the refinement throws") {
    const auto c = collection({path(4)});
    const auto seqs = refine_collection(c, 2, true);
    CHECK_THROWS_AS(subtree_kernel(seqs[0], seqs[0], 3), DepthError);
    KernelSpec spec;
    spec.iterations = 3;
    CHECK_THROWS_AS(gram_series(seqs, spec), DepthError);
}

TEST_CASE("zero weights make normalization degenerate") {
    KernelSpec spec;
    spec.iterations = 2;
    spec.omega = WeightFunction::table({0, 0});
    try {
        gram_series(collection({path(3), cycle(3)}), spec);
        FAIL("expected DegenerateKernel");
    } catch (const DegenerateKernel& e) {
        CHECK(e.graph_index() == 0);
    }
}

TEST_CASE("Gram series basics") {
    SECTION("isomorphic graphs give an all-ones normalized matrix") {
        const std::vector<std::size_t> perm{2, 0, 3, 1, 4};
        const auto g = path(5);
        for (auto kind : {KernelKind::wl_subtree, KernelKind::wloa}) {
            KernelSpec spec;
            spec.kind = kind;
            spec.iterations = 3;
            const auto s = gram_series(collection({g, g.permuted(perm)}), spec);
            for (std::size_t h = 1; h <= 3; ++h)
                for (std::size_t i = 0; i < 2; ++i)
                    for (std::size_t j = 0; j < 2; ++j) CHECK(s.at(h)(i, j) == Approx(1.0).epsilon(1e-15));
        }
    }
    SECTION("single graph") {
        const auto s = gram_series(collection({cycle(5)}), KernelSpec{});
        CHECK(s.at(1).rows() == 1);
        CHECK(s.at(1)(0, 0) == 1.0);
    }
    SECTION("symmetric, unit diagonal, bounded, and thread-count independent") {
        SyntheticSpec syn;
        syn.family = Family::er_vs_ba;
        syn.sizes = {10, 14};
        syn.count = 16;
        const auto c = generate_synthetic(syn, 8);
        KernelSpec spec;
        spec.iterations = 4;
        const auto one = gram_series(c, spec, 1);
        const auto many = gram_series(c, spec, 4);
        CHECK(one.fingerprint == fingerprint(c));
        for (std::size_t h = 1; h <= 4; ++h) {
            CHECK(one.at(h) == many.at(h));
            CHECK(one.raw[h - 1] == many.raw[h - 1]);
            for (std::size_t i = 0; i < c.size(); ++i) {
                CHECK(one.at(h)(i, i) == 1.0);
                for (std::size_t j = 0; j < c.size(); ++j) {
                    CHECK(one.at(h)(i, j) == one.at(h)(j, i));
                    CHECK(one.at(h)(i, j) >= 0.0);
                    CHECK(one.at(h)(i, j) <= 1.0 + 1e-12);
                }
            }
        }
        CHECK_THROWS_AS(one.at(5), DepthError);
    }
    SECTION("unnormalized series exposes raw values") {
        KernelSpec spec;
        spec.normalized = false;
        spec.iterations = 2;
        const auto s = gram_series(collection({path(3), path(3)}), spec);
        CHECK(s.normalized.empty());
        CHECK(s.at(2)(0, 1) == 6.0);
        spec.kind = KernelKind::wl_subtree;
        CHECK(gram_series(collection({path(3), path(3)}), spec).at(2)(0, 1) == 10.0);
    }
}

TEST_CASE("Gram series is invariant under node permutation") {
    SyntheticSpec syn;
    syn.family = Family::er_vs_ba;
    syn.sizes = {9};
    syn.count = 6;
    const auto c = generate_synthetic(syn, 12);
    auto permuted = c;
    Rng rng(3);
    for (auto& g : permuted.graphs) {
        std::vector<std::size_t> perm(g.node_count());
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        g = g.permuted(perm);
    }
    KernelSpec spec;
    spec.iterations = 3;
    const auto a = gram_series(c, spec), b = gram_series(permuted, spec);
    for (std::size_t h = 1; h <= 3; ++h) CHECK(a.raw[h - 1] == b.raw[h - 1]);
}

TEST_CASE("counterexample fixture reproduces the printed similarities") {
    KernelSpec spec;
    spec.kind = KernelKind::wl_subtree;
    spec.iterations = 2;
    const auto s = gram_series(counterexample_collection(), spec);
    CHECK(s.at(1)(0, 1) == Approx(0.0400).margin(5e-4));
    CHECK(s.at(2)(0, 1) == Approx(0.0404).margin(5e-4));
    CHECK(s.at(1)(0, 1) < s.at(2)(0, 1));
}

TEST_CASE("Gram CSV layout") {
    Matrix m(2, 2);
    m(0, 0) = 1.0;
    m(0, 1) = m(1, 0) = 0.1;
    m(1, 1) = 1.0;
    std::ostringstream out;
    write_gram_csv(out, m);
    CHECK(out.str() == "graph,0,1\n0,1,0.10000000000000001\n1,0.10000000000000001,1\n");
}

TEST_CASE("kernel names round-trip") {
    CHECK(kernel_from_string("wl-subtree") == KernelKind::wl_subtree);
    CHECK(kernel_from_string(to_string(KernelKind::wloa)) == KernelKind::wloa);
    CHECK_FALSE(kernel_from_string("rbf"));
}
