// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "igk/error.hpp"
#include "igk/graph.hpp"
#include "igk/matrix.hpp"
#include "igk/parallel.hpp"
#include "igk/wl.hpp"

namespace igk {

enum class KernelKind { wl_subtree, wloa };

inline std::string to_string(KernelKind k) {
    return k == KernelKind::wl_subtree ? "wl-subtree" : "wloa";
}

inline std::optional<KernelKind> kernel_from_string(const std::string& s) {
    if (s == "wl-subtree" || s == "wl_subtree") return KernelKind::wl_subtree;
    if (s == "wloa") return KernelKind::wloa;
    return std::nullopt;
}

/// Per-iteration weight of the WLOA kernel.
class WeightFunction {
public:
    enum class Kind { constant_one, linear, table };

    static WeightFunction constant_one() { return WeightFunction(Kind::constant_one, {}); }
    static WeightFunction linear() { return WeightFunction(Kind::linear, {}); }
    /// values[i - 1] is the weight of iteration i.
    static WeightFunction table(std::vector<double> values) {
        return WeightFunction(Kind::table, std::move(values));
    }

    Kind kind() const noexcept { return kind_; }
    const std::vector<double>& values() const noexcept { return values_; }

    /// Weight of iteration i >= 1. Iteration 0, when a kernel includes it,
    /// shares the weight of iteration 1.
    double operator()(std::size_t i) const {
        if (i == 0) i = 1;
        switch (kind_) {
            case Kind::constant_one: return 1.0;
            case Kind::linear: return static_cast<double>(i);
            case Kind::table:
                if (i > values_.size()) throw InvalidInput("weight table shorter than iteration " + std::to_string(i));
                return values_[i - 1];
        }
        return 1.0;
    }

    /// Nonnegative and non-decreasing over 1..iterations.
    void validate(std::size_t iterations) const {
        double prev = 0.0;
        for (std::size_t i = 1; i <= iterations; ++i) {
            const double w = (*this)(i);
            if (!(w >= 0.0) || !std::isfinite(w))
                throw InvalidInput("weight of iteration " + std::to_string(i) + " is negative or not finite");
            if (w < prev)
                throw InvalidInput("weight function decreases at iteration " + std::to_string(i));
            prev = w;
        }
    }

    std::string name() const {
        switch (kind_) {
            case Kind::constant_one: return "one";
            case Kind::linear: return "linear";
            case Kind::table: return "table";
        }
        return "?";
    }

private:
    WeightFunction(Kind k, std::vector<double> v) : kind_(k), values_(std::move(v)) {}

    Kind kind_;
    std::vector<double> values_;
};

struct KernelSpec {
    KernelKind kind = KernelKind::wloa;
    std::size_t iterations = 3;
    WeightFunction omega = WeightFunction::constant_one();
    bool include_iteration_zero = false;
    bool normalized = true;
    bool use_node_labels = true;

    std::size_t first_iteration() const noexcept { return include_iteration_zero ? 0 : 1; }

    void validate() const {
        if (iterations < 1) throw InvalidInput("kernel needs at least one iteration");
        if (kind == KernelKind::wloa) omega.validate(iterations);
    }
};

// ---------------------------------------------------------------------------
// Histogram-level primitives
// ---------------------------------------------------------------------------

/// Inner product of two count vectors over the union of their colors.
inline std::int64_t dot(const Histogram& a, const Histogram& b) {
    auto x = a.entries();
    auto y = b.entries();
    std::int64_t sum = 0;
    std::size_t i = 0, j = 0;
    while (i < x.size() && j < y.size()) {
        if (x[i].first < y[j].first) ++i;
        else if (y[j].first < x[i].first) ++j;
        else sum += x[i++].second * y[j++].second;
    }
    return sum;
}

/// Histogram intersection: sum over colors of the smaller count.
inline std::int64_t histmin(const Histogram& a, const Histogram& b) {
    auto x = a.entries();
    auto y = b.entries();
    std::int64_t sum = 0;
    std::size_t i = 0, j = 0;
    while (i < x.size() && j < y.size()) {
        if (x[i].first < y[j].first) ++i;
        else if (y[j].first < x[i].first) ++j;
        else {
            sum += std::min(x[i].second, y[j].second);
            ++i;
            ++j;
        }
    }
    return sum;
}

namespace detail {

inline void check_depth(std::span<const Histogram> a, std::span<const Histogram> b, std::size_t h) {
    if (h + 1 > a.size() || h + 1 > b.size())
        throw DepthError("kernel depth " + std::to_string(h) + " exceeds refinement depth " +
                         std::to_string(std::min(a.size(), b.size()) - 1));
}

}  // namespace detail

/// WL-subtree kernel: sum over iterations first..h of histogram dot products.
/// `a[i]` is the histogram of iteration i.
inline double subtree_kernel(std::span<const Histogram> a, std::span<const Histogram> b,
                             std::size_t h, bool include_iteration_zero = false) {
    detail::check_depth(a, b, h);
    std::int64_t sum = 0;
    for (std::size_t i = include_iteration_zero ? 0 : 1; i <= h; ++i) sum += dot(a[i], b[i]);
    return static_cast<double>(sum);
}

inline double subtree_kernel(const ColoringSequence& a, const ColoringSequence& b, std::size_t h,
                             bool include_iteration_zero = false) {
    return subtree_kernel(a.histograms, b.histograms, h, include_iteration_zero);
}

/// WLOA kernel: sum over iterations first..h of histmin weighted by omega(i).
inline double wloa_kernel(std::span<const Histogram> a, std::span<const Histogram> b,
                          std::size_t h, const WeightFunction& omega,
                          bool include_iteration_zero = false) {
    detail::check_depth(a, b, h);
    double sum = 0.0;
    for (std::size_t i = include_iteration_zero ? 0 : 1; i <= h; ++i)
        sum += static_cast<double>(histmin(a[i], b[i])) * omega(i);
    return sum;
}

inline double wloa_kernel(const ColoringSequence& a, const ColoringSequence& b, std::size_t h,
                          const WeightFunction& omega, bool include_iteration_zero = false) {
    return wloa_kernel(a.histograms, b.histograms, h, omega, include_iteration_zero);
}

inline double normalize(double k_xy, double k_xx, double k_yy) {
    if (!(k_xx > 0.0) || !(k_yy > 0.0))
        throw DegenerateKernel("normalization needs positive self-kernels", 0);
    return k_xy / std::sqrt(k_xx * k_yy);
}

/// Sum of weights over the iterations a depth-h kernel includes.
inline double weight_total(const KernelSpec& spec, std::size_t h) {
    double w = 0.0;
    for (std::size_t i = spec.first_iteration(); i <= h; ++i)
        w += spec.kind == KernelKind::wloa ? spec.omega(i) : 1.0;
    return w;
}

// ---------------------------------------------------------------------------
// Gram series
// ---------------------------------------------------------------------------

struct GramSeries {
    KernelSpec spec;
    std::string fingerprint;
    std::size_t size = 0;
    /// raw[h - 1] holds K^(h).
    std::vector<Matrix> raw;
    /// normalized[h - 1] holds the cosine-normalized K^(h); empty unless spec.normalized.
    std::vector<Matrix> normalized;

    std::size_t depth() const noexcept { return raw.size(); }

    /// The matrix analyses operate on: normalized when available.
    const Matrix& at(std::size_t h) const {
        if (h < 1 || h > depth()) throw DepthError("no Gram matrix for h = " + std::to_string(h));
        return spec.normalized ? normalized[h - 1] : raw[h - 1];
    }
};

/// Fills K^(h) for h = 1..H from precomputed colorings. Pairs (i, j >= i) are
/// split across `threads` workers; each cell is written by one worker.
inline GramSeries gram_series(std::span<const ColoringSequence> seqs, const KernelSpec& spec,
                              std::string fingerprint = {}, std::size_t threads = 0) {
    spec.validate();
    const std::size_t n = seqs.size();
    const std::size_t H = spec.iterations;
    for (std::size_t g = 0; g < n; ++g)
        if (seqs[g].depth() < H)
            throw DepthError("graph " + std::to_string(g) + " refined to depth " +
                             std::to_string(seqs[g].depth()) + " < " + std::to_string(H));

    GramSeries s;
    s.spec = spec;
    s.fingerprint = std::move(fingerprint);
    s.size = n;
    s.raw.assign(H, Matrix(n, n));

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(n * (n + 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) pairs.emplace_back(i, j);

    parallel_for(pairs.size(), threads, [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t p = begin; p < end; ++p) {
            const auto [i, j] = pairs[p];
            const auto& a = seqs[i].histograms;
            const auto& b = seqs[j].histograms;
            double acc = 0.0;
            for (std::size_t it = spec.first_iteration(); it <= H; ++it) {
                if (spec.kind == KernelKind::wl_subtree)
                    acc += static_cast<double>(dot(a[it], b[it]));
                else
                    acc += static_cast<double>(histmin(a[it], b[it])) * spec.omega(it);
                if (it >= 1) {
                    s.raw[it - 1](i, j) = acc;
                    s.raw[it - 1](j, i) = acc;
                }
            }
        }
    });

    if (spec.normalized) {
        s.normalized.assign(H, Matrix(n, n));
        for (std::size_t h = 0; h < H; ++h) {
            const Matrix& k = s.raw[h];
            for (std::size_t i = 0; i < n; ++i)
                if (!(k(i, i) > 0.0))
                    throw DegenerateKernel("zero self-kernel for graph " + std::to_string(i), i);
            Matrix& out = s.normalized[h];
            for (std::size_t i = 0; i < n; ++i) {
                out(i, i) = 1.0;
                for (std::size_t j = i + 1; j < n; ++j) {
                    const double v = k(i, j) / std::sqrt(k(i, i) * k(j, j));
                    out(i, j) = v;
                    out(j, i) = v;
                }
            }
        }
    }
    return s;
}

/// Refines the collection once to depth H under a shared dictionary, then
/// fills the series.
inline GramSeries gram_series(const GraphCollection& c, const KernelSpec& spec,
                              std::size_t threads = 0) {
    spec.validate();
    const auto seqs = refine_collection(c, spec.iterations, spec.use_node_labels);
    return gram_series(seqs, spec, fingerprint(c), threads);
}

/// CSV with a header row of graph ids; values printed with 17 significant digits.
inline void write_gram_csv(std::ostream& out, const Matrix& m) {
    out << "graph";
    for (std::size_t j = 0; j < m.cols(); ++j) out << ',' << j;
    out << '\n';
    char buf[40];
    for (std::size_t i = 0; i < m.rows(); ++i) {
        out << i;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
            out << ',' << buf;
        }
        out << '\n';
    }
}

}  // namespace igk
