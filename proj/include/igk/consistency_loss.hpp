// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "igk/error.hpp"
#include "igk/matrix.hpp"
#include "igk/rng.hpp"
#include "igk/tensor.hpp"

namespace igk {

enum class ConsistencyMode { off, all, first_last };

inline std::string to_string(ConsistencyMode m) {
    switch (m) {
        case ConsistencyMode::off: return "off";
        case ConsistencyMode::all: return "all";
        case ConsistencyMode::first_last: return "first-last";
    }
    return "?";
}

inline std::optional<ConsistencyMode> consistency_mode_from_string(const std::string& s) {
    if (s == "off") return ConsistencyMode::off;
    if (s == "all") return ConsistencyMode::all;
    if (s == "first-last" || s == "first_last") return ConsistencyMode::first_last;
    return std::nullopt;
}

struct ConsistencyOptions {
    ConsistencyMode mode = ConsistencyMode::all;
    /// Use the probability formulas exactly as printed, which express the
    /// probability that x_n is the *farther* graph. Over unordered pairs this
    /// yields the same loss as the default orientation.
    bool paper_literal_sign = false;
    /// Average over every reference graph instead of drawing one.
    bool all_references = false;
};

/// 1 - cos(H_i, H_j) with a zero diagonal; rows with norm below 1e-12 are
/// scaled by 1e12 instead of their norm.
inline Matrix cosine_distance_matrix(const Matrix& h) {
    const std::size_t n = h.rows(), d = h.cols();
    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += h(i, j) * h(i, j);
        norms[i] = std::max(std::sqrt(s), ad::kNormEpsilon);
    }
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double dotp = 0.0;
            for (std::size_t c = 0; c < d; ++c) dotp += h(i, c) * h(j, c);
            const double dist = std::clamp(1.0 - dotp / (norms[i] * norms[j]), 0.0, 2.0);
            out(i, j) = dist;
            out(j, i) = dist;
        }
    return out;
}

/// Differentiable counterpart: D = 1 - N N^T with N the row-normalized input.
/// The diagonal is not forced to zero; the loss never reads it.
inline ad::Tensor cosine_distance_matrix(const ad::Tensor& h) {
    const ad::Tensor n = ad::row_l2_normalize(h);
    return ad::add_scalar(ad::scalar_mul(ad::matmul(n, ad::transpose(n)), -1.0), 1.0);
}

namespace detail {

inline void require_triple(std::size_t size, std::size_t k, std::size_t n, std::size_t m) {
    if (k >= size || n >= size || m >= size) throw InvalidPair("index outside the distance matrix");
    if (k == n || k == m || n == m) throw InvalidPair("reference, n and m must be distinct");
}

inline double logistic(double z) {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace detail

/// Probability that x_k is closer to x_n than to x_m:
/// 1 / (1 + exp(D[k][n] - D[k][m])).
inline double predicted_prob(const Matrix& d, std::size_t k, std::size_t n, std::size_t m,
                             bool paper_literal_sign = false) {
    detail::require_triple(d.rows(), k, n, m);
    const double z = d(k, m) - d(k, n);
    return detail::logistic(paper_literal_sign ? -z : z);
}

/// 1 when x_n is strictly closer to x_k, 0 when x_m is, 1/2 on an exact tie.
inline double reference_prob(const Matrix& d_prev, std::size_t k, std::size_t n, std::size_t m,
                             bool paper_literal_sign = false) {
    detail::require_triple(d_prev.rows(), k, n, m);
    double diff = d_prev(k, m) - d_prev(k, n);
    if (paper_literal_sign) diff = -diff;
    return diff > 0.0 ? 1.0 : (diff < 0.0 ? 0.0 : 0.5);
}

inline double pair_cross_entropy(double p_ref, double p_pred) {
    double loss = 0.0;
    if (p_ref > 0.0) loss -= p_ref * std::log(p_pred);
    if (p_ref < 1.0) loss -= (1.0 - p_ref) * std::log(1.0 - p_pred);
    return loss;
}

/// Mean pair cross-entropy for one reference graph k between the previous
/// layer's orderings (constant targets) and the current layer's predicted
/// probabilities. Gradient flows only into `current`.
inline ad::Tensor consistency_term(const Matrix& previous_distances, const ad::Tensor& current,
                                   std::size_t k, bool paper_literal_sign = false) {
    const std::size_t n = current.rows();
    if (previous_distances.rows() != n) throw ShapeError("layer batch sizes differ");
    if (k >= n) throw InvalidPair("reference index outside the batch");

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
            if (a != k && b != k) pairs.emplace_back(a, b);
    const std::size_t p = pairs.size();

    // z_p = D[k][m] - D[k][n] for pair (n, m), via a constant +-1 selection matrix.
    const double sign = paper_literal_sign ? -1.0 : 1.0;
    ad::Tensor select(n, p);
    auto& sv = select.mutable_values();
    std::vector<double> target(p), complement(p);
    for (std::size_t q = 0; q < p; ++q) {
        const auto [a, b] = pairs[q];
        sv[b * p + q] = sign;
        sv[a * p + q] = -sign;
        target[q] = reference_prob(previous_distances, k, a, b, paper_literal_sign);
        complement[q] = 1.0 - target[q];
    }
    ad::Tensor pick(1, n);
    pick.mutable_values()[k] = 1.0;

    const ad::Tensor normed = ad::row_l2_normalize(current);
    const ad::Tensor sims = ad::matmul(ad::matmul(pick, normed), ad::transpose(normed));
    const ad::Tensor dist = ad::add_scalar(ad::scalar_mul(sims, -1.0), 1.0);
    const ad::Tensor z = ad::matmul(dist, select);
    const ad::Tensor log_p = ad::log(ad::sigmoid(z));
    const ad::Tensor log_q = ad::log(ad::sigmoid(ad::scalar_mul(z, -1.0)));
    const ad::Tensor ce = ad::add(ad::elementwise_mul(ad::Tensor(1, p, target), log_p),
                                  ad::elementwise_mul(ad::Tensor(1, p, complement), log_q));
    return ad::scalar_mul(ad::reduce_mean(ce), -1.0);
}

/// Layer pairs (previous, current) that a mode penalizes, 0-indexed.
inline std::vector<std::pair<std::size_t, std::size_t>> layer_pairs(ConsistencyMode mode,
                                                                    std::size_t layers) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (mode == ConsistencyMode::off || layers < 2) return out;
    if (mode == ConsistencyMode::first_last) {
        out.emplace_back(0, layers - 1);
    } else {
        for (std::size_t h = 1; h < layers; ++h) out.emplace_back(h - 1, h);
    }
    return out;
}

/// Sum over penalized layer pairs of the mean pair cross-entropy. One
/// reference graph per layer pair is drawn from `rng` in pair order (none when
/// all_references is set). Batches smaller than three give an exact zero.
inline ad::Tensor consistency_loss(std::span<const ad::Tensor> layers, const ConsistencyOptions& opt,
                                   Rng& rng) {
    if (layers.empty()) return ad::Tensor::scalar(0.0);
    const std::size_t n = layers.front().rows();
    const auto pairs = layer_pairs(opt.mode, layers.size());
    if (n < 3 || pairs.empty()) return ad::Tensor::scalar(0.0);

    std::optional<ad::Tensor> total;
    for (const auto& [prev, cur] : pairs) {
        const Matrix d_prev = cosine_distance_matrix(layers[prev].to_matrix());
        ad::Tensor term;
        if (opt.all_references) {
            std::optional<ad::Tensor> sum;
            for (std::size_t k = 0; k < n; ++k) {
                auto t = consistency_term(d_prev, layers[cur], k, opt.paper_literal_sign);
                sum = sum ? ad::add(*sum, t) : t;
            }
            term = ad::scalar_mul(*sum, 1.0 / static_cast<double>(n));
        } else {
            const auto k = static_cast<std::size_t>(rng.below(n));
            term = consistency_term(d_prev, layers[cur], k, opt.paper_literal_sign);
        }
        total = total ? ad::add(*total, term) : term;
    }
    return *total;
}

/// origin + lambda * consistency; lambda = 0 returns `origin` itself.
inline ad::Tensor total_loss(const ad::Tensor& origin, const ad::Tensor& consistency, double lambda) {
    if (!(lambda >= 0.0)) throw InvalidConfig("lambda must be nonnegative");
    if (lambda == 0.0) return origin;
    return ad::add(origin, ad::scalar_mul(consistency, lambda));
}

}  // namespace igk
