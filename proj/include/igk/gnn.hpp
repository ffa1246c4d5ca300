// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "igk/consistency_loss.hpp"
#include "igk/error.hpp"
#include "igk/graph.hpp"
#include "igk/matrix.hpp"
#include "igk/metrics.hpp"
#include "igk/rng.hpp"
#include "igk/tensor.hpp"

namespace igk {

struct GnnConfig {
    std::size_t layer_count = 3;
    std::size_t hidden_dim = 32;
    double learning_rate = 0.5;
    std::size_t epochs = 100;
    std::size_t batch_size = 64;
    std::uint64_t seed = 0;
    double dropout_rate = 0.0;
    double lambda = 0.0;
    ConsistencyOptions consistency{ConsistencyMode::off, false, false};

    void validate() const {
        if (layer_count < 2) throw InvalidConfig("layer_count must be at least 2");
        if (hidden_dim < 1) throw InvalidConfig("hidden_dim must be positive");
        if (!(learning_rate > 0.0)) throw InvalidConfig("learning_rate must be positive");
        if (batch_size < 1) throw InvalidConfig("batch_size must be positive");
        if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw InvalidConfig("dropout_rate must lie in [0, 1)");
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidConfig("lambda must be a nonnegative number");
    }

    bool consistency_active() const {
        return consistency.mode != ConsistencyMode::off && lambda > 0.0;
    }
};

/// Maps node labels to one-hot columns. A collection with a single distinct
/// label gets one all-ones column.
class FeatureEncoder {
public:
    explicit FeatureEncoder(const GraphCollection& c) {
        for (const auto& g : c.graphs)
            for (Label l : g.node_labels()) index_.try_emplace(l, 0);
        std::size_t i = 0;
        for (auto& [label, idx] : index_) idx = i++;
    }

    std::size_t dim() const noexcept { return std::max<std::size_t>(index_.size(), 1); }

    /// Unknown labels encode as an all-zero row.
    std::optional<std::size_t> column(Label l) const {
        auto it = index_.find(l);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

private:
    std::map<Label, std::size_t> index_;
};

/// Disjoint union of a list of graphs with row-normalized adjacency D^-1 (A + I).
struct BatchGraph {
    Matrix adjacency;
    Matrix features;
    /// assignment[v] is the batch position of the graph owning node v.
    std::vector<std::size_t> assignment;
    std::vector<int> labels;
    std::size_t graph_count = 0;
};

inline BatchGraph build_batch(std::span<const LabeledGraph* const> graphs, const FeatureEncoder& enc) {
    if (graphs.empty()) throw InvalidInput("cannot batch an empty list of graphs");
    std::size_t total = 0;
    for (const auto* g : graphs) total += g->node_count();

    BatchGraph b;
    b.graph_count = graphs.size();
    b.adjacency = Matrix(total, total);
    b.features = Matrix(total, enc.dim());
    b.assignment.reserve(total);
    std::size_t offset = 0;
    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
        const auto& g = *graphs[gi];
        for (std::size_t v = 0; v < g.node_count(); ++v) {
            const double w = 1.0 / static_cast<double>(g.degree(v) + 1);
            b.adjacency(offset + v, offset + v) = w;
            for (NodeId u : g.neighbors(v)) b.adjacency(offset + v, offset + u) = w;
            if (auto col = enc.column(g.node_labels()[v])) b.features(offset + v, *col) = 1.0;
            b.assignment.push_back(gi);
        }
        b.labels.push_back(g.graph_label());
        offset += g.node_count();
    }
    return b;
}

inline BatchGraph build_batch(std::span<const LabeledGraph> graphs, const FeatureEncoder& enc) {
    std::vector<const LabeledGraph*> ptrs;
    for (const auto& g : graphs) ptrs.push_back(&g);
    return build_batch(std::span<const LabeledGraph* const>(ptrs), enc);
}

/// Trainable weights: one matrix per message-passing layer plus the output map.
struct GnnWeights {
    std::vector<ad::Tensor> layers;
    ad::Tensor output;

    std::vector<ad::Tensor*> all() {
        std::vector<ad::Tensor*> out;
        for (auto& l : layers) out.push_back(&l);
        out.push_back(&output);
        return out;
    }

    std::vector<const ad::Tensor*> all() const {
        std::vector<const ad::Tensor*> out;
        for (const auto& l : layers) out.push_back(&l);
        out.push_back(&output);
        return out;
    }

    std::vector<std::vector<double>> snapshot() const {
        std::vector<std::vector<double>> out;
        for (const auto* t : all()) out.push_back(t->values());
        return out;
    }

    void restore(const std::vector<std::vector<double>>& values) {
        auto ts = all();
        for (std::size_t i = 0; i < ts.size(); ++i) ts[i]->mutable_values() = values[i];
    }
};

/// Glorot-uniform initialization from the given generator.
inline GnnWeights init_weights(const GnnConfig& cfg, std::size_t feature_dim, std::size_t class_count,
                               Rng& rng) {
    auto glorot = [&rng](std::size_t in, std::size_t out) {
        const double a = std::sqrt(6.0 / static_cast<double>(in + out));
        std::vector<double> v(in * out);
        for (double& x : v) x = rng.uniform(-a, a);
        return ad::Tensor(in, out, std::move(v), true);
    };
    GnnWeights w;
    std::size_t in = feature_dim;
    for (std::size_t k = 0; k < cfg.layer_count; ++k) {
        w.layers.push_back(glorot(in, cfg.hidden_dim));
        in = cfg.hidden_dim;
    }
    w.output = glorot(cfg.hidden_dim, class_count);
    return w;
}

/// Per-layer mean-pooled graph representations (layer 1..T) and logits.
struct LayerRepresentations {
    std::vector<ad::Tensor> graph_reps;
    ad::Tensor logits;
};

/// H_k = relu(A_hat H_{k-1} W_k); graph rep of layer k = per-graph mean of H_k;
/// logits = last graph rep * W_out. Dropout is applied to H_k when
/// `dropout_rng` is given and the rate is positive.
inline LayerRepresentations forward(const BatchGraph& batch, const GnnWeights& w, double dropout_rate = 0.0,
                                    Rng* dropout_rng = nullptr) {
    const ad::Tensor adj = ad::Tensor::from_matrix(batch.adjacency);
    ad::Tensor h = ad::Tensor::from_matrix(batch.features);
    LayerRepresentations out;
    for (const auto& wk : w.layers) {
        h = ad::relu(ad::matmul(adj, ad::matmul(h, wk)));
        if (dropout_rng != nullptr && dropout_rate > 0.0) {
            ad::Tensor mask(h.rows(), h.cols());
            const double keep = 1.0 / (1.0 - dropout_rate);
            for (double& m : mask.mutable_values()) m = dropout_rng->bernoulli(dropout_rate) ? 0.0 : keep;
            h = ad::elementwise_mul(h, mask);
        }
        out.graph_reps.push_back(ad::segment_mean(h, batch.assignment, batch.graph_count));
    }
    out.logits = ad::matmul(out.graph_reps.back(), w.output);
    return out;
}

inline std::vector<int> argmax_rows(const ad::Tensor& logits) {
    std::vector<int> out(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < logits.cols(); ++j)
            if (logits(i, j) > logits(i, best)) best = j;
        out[i] = static_cast<int>(best);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> valid;
    std::vector<std::size_t> test;
};

/// Seeded shuffle cut by the given ratios (e.g. 8:1:1); the test part takes
/// the remainder.
inline Split make_split(std::size_t n, std::span<const double> ratios, std::uint64_t seed) {
    if (ratios.size() != 3) throw InvalidConfig("split needs three ratios");
    const double total = ratios[0] + ratios[1] + ratios[2];
    if (!(total > 0.0) || ratios[0] <= 0.0 || ratios[1] < 0.0 || ratios[2] < 0.0)
        throw InvalidConfig("split ratios must be nonnegative with a positive training share");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed ^ 0x5eedULL);
    rng.shuffle(idx);
    const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratios[0] / total));
    const auto n_valid = static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratios[1] / total));
    Split s;
    s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(std::min(n, n_train)));
    s.valid.assign(idx.begin() + static_cast<std::ptrdiff_t>(s.train.size()),
                   idx.begin() + static_cast<std::ptrdiff_t>(std::min(n, s.train.size() + n_valid)));
    s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(s.train.size() + s.valid.size()), idx.end());
    if (s.train.empty()) throw InvalidConfig("training split is empty");
    return s;
}

struct EpochRecord {
    std::size_t epoch = 0;
    double origin_loss = 0.0;
    double consistency_loss = 0.0;
    double total_loss = 0.0;
    double train_accuracy = 0.0;
    std::optional<double> valid_accuracy;
};

struct TrainResult {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    std::optional<double> best_valid_accuracy;
    std::optional<double> test_accuracy;
    std::optional<LayerCorrelationReport> test_correlation;
    GnnWeights weights;
};

struct Evaluation {
    std::vector<int> predictions;
    /// Graph representations per layer, rows in the order of `indices`.
    std::vector<Matrix> layer_reps;
};

inline Evaluation evaluate(const GraphCollection& c, std::span<const std::size_t> indices,
                           const GnnWeights& w, const FeatureEncoder& enc,
                           std::size_t batch_size = 256) {
    Evaluation e;
    e.layer_reps.assign(w.layers.size(), Matrix(indices.size(), w.layers.front().cols()));
    for (std::size_t start = 0; start < indices.size(); start += batch_size) {
        const std::size_t end = std::min(indices.size(), start + batch_size);
        std::vector<const LabeledGraph*> graphs;
        for (std::size_t i = start; i < end; ++i) graphs.push_back(&c.graphs[indices[i]]);
        const auto batch = build_batch(std::span<const LabeledGraph* const>(graphs), enc);
        const auto reps = forward(batch, w);
        for (int p : argmax_rows(reps.logits)) e.predictions.push_back(p);
        for (std::size_t l = 0; l < reps.graph_reps.size(); ++l)
            for (std::size_t r = 0; r < reps.graph_reps[l].rows(); ++r)
                for (std::size_t col = 0; col < reps.graph_reps[l].cols(); ++col)
                    e.layer_reps[l](start + r, col) = reps.graph_reps[l](r, col);
    }
    return e;
}

namespace detail {

/// Independent stream seeds derived from the run seed (splitmix64).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::vector<int> labels_of(const GraphCollection& c, std::span<const std::size_t> idx) {
    std::vector<int> out;
    for (auto i : idx) out.push_back(c.graphs[i].graph_label());
    return out;
}

}  // namespace detail

/// Minibatch gradient descent on cross-entropy + lambda * consistency loss.
/// Weights are taken from the epoch with the highest validation accuracy
/// (latest on ties; last epoch when there is no validation split).
/// With lambda = 0 or mode off the consistency path is never evaluated.
inline TrainResult train(const GraphCollection& c, const Split& split, const GnnConfig& cfg) {
    cfg.validate();
    c.validate();
    const FeatureEncoder enc(c);
    Rng init_rng(detail::derive_seed(cfg.seed, 0));
    Rng shuffle_rng(detail::derive_seed(cfg.seed, 1));
    Rng dropout_rng(detail::derive_seed(cfg.seed, 2));
    Rng reference_rng(detail::derive_seed(cfg.seed, 3));

    TrainResult result;
    result.weights = init_weights(cfg, enc.dim(), static_cast<std::size_t>(std::max(c.class_count, 2)), init_rng);
    auto params = result.weights.all();
    std::vector<std::vector<double>> best = result.weights.snapshot();

    std::vector<std::size_t> order = split.train;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        EpochRecord rec;
        rec.epoch = epoch;
        std::size_t batches = 0, correct = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::vector<const LabeledGraph*> graphs;
            for (std::size_t i = start; i < end; ++i) graphs.push_back(&c.graphs[order[i]]);
            const auto batch = build_batch(std::span<const LabeledGraph* const>(graphs), enc);
            const auto reps = forward(batch, result.weights, cfg.dropout_rate, &dropout_rng);

            const ad::Tensor origin = ad::softmax_cross_entropy(reps.logits, batch.labels);
            ad::Tensor loss = origin;
            double cons_value = 0.0;
            if (cfg.consistency_active()) {
                const ad::Tensor cons = consistency_loss(reps.graph_reps, cfg.consistency, reference_rng);
                cons_value = cons.item();
                loss = total_loss(origin, cons, cfg.lambda);
            }
            if (!std::isfinite(loss.item()))
                throw Error("non-finite loss at epoch " + std::to_string(epoch));

            for (auto* p : params) p->zero_grad();
            loss.backward();
            for (auto* p : params) {
                auto& v = p->mutable_values();
                const auto& g = p->grad();
                for (std::size_t i = 0; i < v.size(); ++i) v[i] -= cfg.learning_rate * g[i];
            }

            const auto pred = argmax_rows(reps.logits);
            for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == batch.labels[i];
            rec.origin_loss += origin.item();
            rec.consistency_loss += cons_value;
            rec.total_loss += loss.item();
            ++batches;
        }
        const double nb = static_cast<double>(std::max<std::size_t>(batches, 1));
        rec.origin_loss /= nb;
        rec.consistency_loss /= nb;
        rec.total_loss /= nb;
        rec.train_accuracy = order.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(order.size());

        if (!split.valid.empty()) {
            const auto ev = evaluate(c, split.valid, result.weights, enc);
            const auto truth = detail::labels_of(c, split.valid);
            rec.valid_accuracy = accuracy(ev.predictions, truth);
            if (!result.best_valid_accuracy || *rec.valid_accuracy >= *result.best_valid_accuracy) {
                result.best_valid_accuracy = rec.valid_accuracy;
                result.best_epoch = epoch;
                best = result.weights.snapshot();
            }
        } else {
            result.best_epoch = epoch;
            best = result.weights.snapshot();
        }
        result.epochs.push_back(rec);
    }
    result.weights.restore(best);

    if (!split.test.empty()) {
        const auto ev = evaluate(c, split.test, result.weights, enc);
        result.test_accuracy = accuracy(ev.predictions, detail::labels_of(c, split.test));
        if (split.test.size() >= 3) result.test_correlation = layer_rank_correlation(ev.layer_reps);
    }
    return result;
}

struct GradientCheckReport {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;
};

/// Finite-difference check of every weight tensor against the gradient of
/// cross-entropy + lambda * consistency on one batch. The reference draws are
/// replayed from the same seed on every evaluation.
inline GradientCheckReport check_training_gradients(const GraphCollection& c, std::span<const std::size_t> batch_idx,
                                                    const GnnConfig& cfg, double eps = 1e-5) {
    cfg.validate();
    const FeatureEncoder enc(c);
    Rng init_rng(detail::derive_seed(cfg.seed, 0));
    GnnWeights w = init_weights(cfg, enc.dim(), static_cast<std::size_t>(std::max(c.class_count, 2)), init_rng);
    std::vector<const LabeledGraph*> graphs;
    for (auto i : batch_idx) graphs.push_back(&c.graphs[i]);
    const auto batch = build_batch(std::span<const LabeledGraph* const>(graphs), enc);

    auto loss = [&](const ad::Tensor&) {
        const auto reps = forward(batch, w);
        const ad::Tensor origin = ad::softmax_cross_entropy(reps.logits, batch.labels);
        if (!cfg.consistency_active()) return origin;
        Rng reference_rng(detail::derive_seed(cfg.seed, 3));
        return total_loss(origin, consistency_loss(reps.graph_reps, cfg.consistency, reference_rng), cfg.lambda);
    };

    GradientCheckReport r;
    for (auto* p : w.all()) {
        const auto g = ad::grad_check(loss, *p, eps);
        r.max_relative_error = std::max(r.max_relative_error, g.max_relative_error);
        r.checked += g.checked;
        r.skipped += g.skipped;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Checkpoints: "IGKW", u32 tensor count, then per tensor u64 rows, u64 cols
// and rows * cols little-endian IEEE-754 doubles in row-major order.
// ---------------------------------------------------------------------------

inline void save_checkpoint(const std::filesystem::path& path, const GnnWeights& w) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    out.write("IGKW", 4);
    const auto tensors = w.all();
    const auto count = static_cast<std::uint32_t>(tensors.size());
    out.write(reinterpret_cast<const char*>(&count), sizeof count);
    for (const auto* t : tensors) {
        const std::uint64_t shape[2] = {t->rows(), t->cols()};
        out.write(reinterpret_cast<const char*>(shape), sizeof shape);
        out.write(reinterpret_cast<const char*>(t->values().data()),
                  static_cast<std::streamsize>(t->values().size() * sizeof(double)));
    }
}

inline GnnWeights load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open checkpoint " + path.string());
    char magic[4];
    std::uint32_t count = 0;
    if (!in.read(magic, 4) || std::memcmp(magic, "IGKW", 4) != 0 ||
        !in.read(reinterpret_cast<char*>(&count), sizeof count) || count < 2)
        throw ParseError("not a weight checkpoint: " + path.string());
    GnnWeights w;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint64_t shape[2];
        if (!in.read(reinterpret_cast<char*>(shape), sizeof shape))
            throw ParseError("truncated checkpoint header");
        std::vector<double> v(shape[0] * shape[1]);
        if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double))))
            throw ParseError("truncated checkpoint data");
        ad::Tensor t(shape[0], shape[1], std::move(v), true);
        if (i + 1 < count) w.layers.push_back(t);
        else w.output = t;
    }
    return w;
}

}  // namespace igk
