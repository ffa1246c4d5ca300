#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "igk/gnn.hpp"

using namespace igk;
using Catch::Approx;

namespace {

GraphCollection cycles_vs_paths(std::size_t count, std::vector<std::size_t> sizes = {4, 5, 6, 7, 8, 9}) {
    SyntheticSpec spec;
    spec.family = Family::cycles_vs_paths;
    spec.sizes = std::move(sizes);
    spec.count = count;
    return generate_synthetic(spec, 0);
}

GnnConfig small_config() {
    GnnConfig cfg;
    cfg.hidden_dim = 8;
    cfg.epochs = 5;
    return cfg;
}

}  // namespace

TEST_CASE("batch adjacency is row-normalized with self loops") {
    const auto p3 = LabeledGraph::from_edges(3, detail::path_edges(3), {});
    const auto c4 = LabeledGraph::from_edges(4, detail::cycle_edges(4), {}, 1);
    const GraphCollection c{{p3, c4}, 2, "t", {0, 1}};
    const FeatureEncoder enc(c);
    const std::vector<LabeledGraph> gs{p3, c4};
    const auto b = build_batch(std::span<const LabeledGraph>(gs), enc);
    REQUIRE(b.adjacency.rows() == 7);
    CHECK(b.graph_count == 2);
    CHECK(b.assignment == std::vector<std::size_t>{0, 0, 0, 1, 1, 1, 1});
    CHECK(b.labels == std::vector<int>{0, 1});
    for (std::size_t r = 0; r < 7; ++r) {
        double sum = 0.0;
        for (std::size_t col = 0; col < 7; ++col) {
            sum += b.adjacency(r, col);
            if (b.assignment[r] != b.assignment[col]) CHECK(b.adjacency(r, col) == 0.0);
        }
        CHECK(sum == Approx(1.0));
    }
    CHECK(b.adjacency(1, 1) == Approx(1.0 / 3.0));
    CHECK(b.adjacency(0, 0) == 0.5);

    const auto iso = LabeledGraph::from_edges(1, {}, {});
    const std::vector<LabeledGraph> single{iso};
    CHECK(build_batch(std::span<const LabeledGraph>(single), enc).adjacency(0, 0) == 1.0);
    CHECK_THROWS_AS(build_batch(std::span<const LabeledGraph>(), enc), InvalidInput);
}

TEST_CASE("zero weights give zero representations") {
    const auto c = cycles_vs_paths(4);
    const FeatureEncoder enc(c);
    Rng rng(1);
    auto w = init_weights(small_config(), enc.dim(), 2, rng);
    for (auto* t : w.all()) std::fill(t->mutable_values().begin(), t->mutable_values().end(), 0.0);
    const auto reps = forward(build_batch(std::span<const LabeledGraph>(c.graphs), enc), w);
    REQUIRE(reps.graph_reps.size() == 3);
    for (const auto& r : reps.graph_reps)
        for (double v : r.values()) CHECK(v == 0.0);
}

TEST_CASE("graph order in a batch only permutes the outputs") {
    const auto c = cycles_vs_paths(6);
    const FeatureEncoder enc(c);
    Rng rng(2);
    const auto w = init_weights(small_config(), enc.dim(), 2, rng);
    std::vector<const LabeledGraph*> fwd, rev;
    for (std::size_t i = 0; i < c.size(); ++i) {
        fwd.push_back(&c.graphs[i]);
        rev.push_back(&c.graphs[c.size() - 1 - i]);
    }
    const auto a = forward(build_batch(std::span<const LabeledGraph* const>(fwd), enc), w);
    const auto b = forward(build_batch(std::span<const LabeledGraph* const>(rev), enc), w);
    for (std::size_t i = 0; i < c.size(); ++i)
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(a.logits(i, j) == Approx(b.logits(c.size() - 1 - i, j)).epsilon(1e-12));
}

TEST_CASE("train/valid/test split") {
    const std::vector<double> ratios{8, 1, 1};
    const auto s = make_split(60, ratios, 4);
    CHECK(s.train.size() == 48);
    CHECK(s.valid.size() == 6);
    CHECK(s.test.size() == 6);
    std::vector<std::size_t> all;
    for (const auto* part : {&s.train, &s.valid, &s.test}) all.insert(all.end(), part->begin(), part->end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < 60; ++i) CHECK(all[i] == i);
    CHECK(make_split(60, ratios, 4).train == s.train);
    const std::vector<double> bad{0, 1, 1};
    CHECK_THROWS_AS(make_split(10, bad, 0), InvalidConfig);
}

TEST_CASE("training is deterministic and lambda zero matches consistency off") {
    const auto c = cycles_vs_paths(20);
    const std::vector<double> ratios{8, 1, 1};
    const auto split = make_split(c.size(), ratios, 0);
    auto cfg = small_config();
    cfg.seed = 5;
    const auto a = train(c, split, cfg);
    const auto b = train(c, split, cfg);
    REQUIRE(a.epochs.size() == cfg.epochs);
    for (std::size_t e = 0; e < a.epochs.size(); ++e) CHECK(a.epochs[e].total_loss == b.epochs[e].total_loss);
    CHECK(a.weights.snapshot() == b.weights.snapshot());

    auto zero = cfg;
    zero.consistency.mode = ConsistencyMode::all;
    zero.lambda = 0.0;
    CHECK(train(c, split, zero).weights.snapshot() == a.weights.snapshot());

    auto with = cfg;
    with.consistency.mode = ConsistencyMode::all;
    with.lambda = 1.0;
    const auto r = train(c, split, with);
    CHECK(r.weights.snapshot() != a.weights.snapshot());
    for (const auto& e : r.epochs) {
        CHECK(e.consistency_loss > 0.0);
        CHECK(e.total_loss == Approx(e.origin_loss + e.consistency_loss).epsilon(1e-12));
    }
}

TEST_CASE("checkpoint round-trip") {
    const auto c = cycles_vs_paths(4);
    const FeatureEncoder enc(c);
    Rng rng(3);
    const auto w = init_weights(small_config(), enc.dim(), 2, rng);
    const auto path = std::filesystem::temp_directory_path() / "igk_test_weights.bin";
    save_checkpoint(path, w);
    const auto loaded = load_checkpoint(path);
    CHECK(loaded.snapshot() == w.snapshot());
    CHECK(loaded.layers.size() == w.layers.size());
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOPE1234";
    }
    CHECK_THROWS_AS(load_checkpoint(path), ParseError);
    std::filesystem::remove(path);
}

TEST_CASE("training gradients match finite differences") {
    const auto c = cycles_vs_paths(8, {4, 5, 6, 7});
    std::vector<std::size_t> idx(c.size());
    std::iota(idx.begin(), idx.end(), 0);
    auto cfg = small_config();
    cfg.lambda = 1.0;
    cfg.consistency.mode = ConsistencyMode::all;
    const auto r = check_training_gradients(c, idx, cfg);
    CHECK(r.max_relative_error < 1e-4);
    CHECK(r.checked > 0);
}

TEST_CASE("cycles versus paths is learnable") {
    const auto c = cycles_vs_paths(60);
    const std::vector<double> ratios{8, 1, 1};
    const auto r = train(c, make_split(c.size(), ratios, 0), GnnConfig{});
    REQUIRE(r.test_accuracy);
    CHECK(*r.test_accuracy == 1.0);
    REQUIRE(r.test_correlation);
    CHECK(r.test_correlation->mean_rho.size() == 2);
}

TEST_CASE("invalid configurations") {
    GnnConfig cfg;
    cfg.lambda = -1.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
    cfg = GnnConfig{};
    cfg.layer_count = 1;
    CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
    cfg = GnnConfig{};
    cfg.dropout_rate = 1.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
    cfg = GnnConfig{};
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
}
