// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "igk/error.hpp"
#include "igk/graph.hpp"
#include "igk/kernels.hpp"
#include "igk/parallel.hpp"
#include "igk/rng.hpp"

namespace igk {

enum class Property { monotonic_decrease, order_consistency, wloa_bound };

inline std::string to_string(Property p) {
    switch (p) {
        case Property::monotonic_decrease: return "monotonic_decrease";
        case Property::order_consistency: return "order_consistency";
        case Property::wloa_bound: return "wloa_bound";
    }
    return "?";
}

/// One failed instance. For pair properties `k` is empty; `h` is the lower
/// iteration of the transition h -> h + 1.
struct Violation {
    std::size_t i = 0;
    std::size_t j = 0;
    std::optional<std::size_t> k;
    std::size_t h = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    double magnitude = 0.0;

    auto key() const { return std::tuple(h, i, j, k.value_or(0)); }
};

struct TransitionStats {
    std::size_t h = 0;
    std::uint64_t checked = 0;
    std::uint64_t violations = 0;
    double rate = 0.0;
};

struct ViolationReport {
    Property property = Property::monotonic_decrease;
    KernelKind kernel = KernelKind::wloa;
    std::size_t iterations = 0;
    double tolerance = 0.0;
    std::uint64_t checked = 0;
    std::uint64_t violation_count = 0;
    /// Recorded instances in (h, i, j, k) order; at most AnalysisOptions::max_recorded.
    std::vector<Violation> violations;
    bool truncated = false;
    /// True when triples were sampled instead of enumerated.
    bool sampled = false;
    double rate = 0.0;
    std::vector<TransitionStats> per_transition;
};

struct AnalysisOptions {
    double tolerance = 1e-9;
    /// Collections larger than this are checked on sampled triples.
    std::size_t exhaustive_limit = 200;
    std::uint64_t sample_count = 1'000'000;
    std::uint64_t seed = 0;
    std::size_t max_recorded = 1000;
    std::size_t threads = 1;
};

/// Default premise threshold of the order-consistency scan.
inline constexpr double kOrderPremiseTolerance = 1e-6;

namespace detail {

inline void require_normalized(const GramSeries& s, std::size_t min_depth) {
    if (!s.spec.normalized) throw InvalidInput("analysis needs a normalized Gram series");
    if (s.depth() < min_depth)
        throw InvalidInput("analysis needs at least " + std::to_string(min_depth) + " iterations");
}

struct Accumulator {
    std::vector<std::uint64_t> checked;
    std::vector<std::uint64_t> violated;
    std::vector<Violation> recorded;

    explicit Accumulator(std::size_t transitions) : checked(transitions, 0), violated(transitions, 0) {}
};

inline ViolationReport finish(Property property, const GramSeries& s, double tolerance,
                              std::vector<Accumulator>& parts, std::size_t max_recorded) {
    ViolationReport r;
    r.property = property;
    r.kernel = s.spec.kind;
    r.iterations = s.depth();
    r.tolerance = tolerance;
    const std::size_t transitions = s.depth() - 1;
    r.per_transition.resize(transitions);
    for (std::size_t t = 0; t < transitions; ++t) r.per_transition[t].h = t + 1;
    for (auto& p : parts) {
        for (std::size_t t = 0; t < transitions; ++t) {
            r.per_transition[t].checked += p.checked[t];
            r.per_transition[t].violations += p.violated[t];
        }
        r.violations.insert(r.violations.end(), p.recorded.begin(), p.recorded.end());
    }
    for (auto& t : r.per_transition) {
        r.checked += t.checked;
        r.violation_count += t.violations;
        t.rate = t.checked ? static_cast<double>(t.violations) / static_cast<double>(t.checked) : 0.0;
    }
    r.rate = r.checked ? static_cast<double>(r.violation_count) / static_cast<double>(r.checked) : 0.0;
    std::sort(r.violations.begin(), r.violations.end(),
              [](const Violation& a, const Violation& b) { return a.key() < b.key(); });
    if (r.violations.size() > max_recorded) {
        r.violations.resize(max_recorded);
        r.truncated = true;
    }
    if (r.violations.size() < r.violation_count) r.truncated = true;
    return r;
}

/// Visits (x, y, z) triples, exhaustively or by seeded sampling, partitioned
/// over workers by x (exhaustive) or by sample index (sampled).
template <typename Visit>
bool for_each_triple(std::size_t n, const AnalysisOptions& opt, std::vector<Accumulator>& parts,
                     std::size_t transitions, Visit&& visit) {
    const std::size_t workers = std::min(resolve_threads(opt.threads), std::max<std::size_t>(n, 1));
    parts.assign(workers, Accumulator(transitions));
    if (n <= opt.exhaustive_limit) {
        parallel_for(n, workers, [&](std::size_t begin, std::size_t end, std::size_t w) {
            for (std::size_t x = begin; x < end; ++x)
                for (std::size_t y = 0; y < n; ++y)
                    for (std::size_t z = 0; z < n; ++z)
                        if (x != y && x != z && y != z) visit(x, y, z, parts[w]);
        });
        return false;
    }
    // Triples are drawn up front so the sample does not depend on the worker count.
    Rng rng(opt.seed);
    std::vector<std::array<std::size_t, 3>> sample;
    sample.reserve(opt.sample_count);
    while (sample.size() < opt.sample_count) {
        const auto x = static_cast<std::size_t>(rng.below(n));
        const auto y = static_cast<std::size_t>(rng.below(n));
        const auto z = static_cast<std::size_t>(rng.below(n));
        if (x != y && x != z && y != z) sample.push_back({x, y, z});
    }
    parallel_for(sample.size(), workers, [&](std::size_t begin, std::size_t end, std::size_t w) {
        for (std::size_t p = begin; p < end; ++p) visit(sample[p][0], sample[p][1], sample[p][2], parts[w]);
    });
    return true;
}

}  // namespace detail

/// Flags every pair i < j and transition h -> h+1 where the normalized value
/// grows by more than `tolerance`. The diagonal is never checked.
inline ViolationReport check_monotonic_decrease(const GramSeries& s,
                                                const AnalysisOptions& opt = {}) {
    detail::require_normalized(s, 2);
    const std::size_t n = s.size;
    const std::size_t transitions = s.depth() - 1;
    std::vector<detail::Accumulator> parts(1, detail::Accumulator(transitions));
    auto& acc = parts.front();
    for (std::size_t h = 1; h <= transitions; ++h) {
        const Matrix& cur = s.at(h);
        const Matrix& next = s.at(h + 1);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                ++acc.checked[h - 1];
                if (next(i, j) > cur(i, j) + opt.tolerance) {
                    ++acc.violated[h - 1];
                    if (acc.recorded.size() < opt.max_recorded)
                        acc.recorded.push_back({i, j, std::nullopt, h, next(i, j), cur(i, j),
                                                next(i, j) - cur(i, j)});
                }
            }
    }
    return detail::finish(Property::monotonic_decrease, s, opt.tolerance, parts, opt.max_recorded);
}

/// Counts triples (x, y, z) whose strict ordering K(x,y) > K(x,z) + t at h is
/// reversed beyond t at h + 1. `checked` counts satisfied premises only.
inline ViolationReport check_order_consistency(const GramSeries& s, AnalysisOptions opt = {}) {
    detail::require_normalized(s, 2);
    if (s.size < 3) throw InvalidInput("order consistency needs at least three graphs");
    const std::size_t transitions = s.depth() - 1;
    const double t = opt.tolerance;
    std::vector<detail::Accumulator> parts;
    const bool sampled = detail::for_each_triple(
        s.size, opt, parts, transitions,
        [&](std::size_t x, std::size_t y, std::size_t z, detail::Accumulator& acc) {
            for (std::size_t h = 1; h <= transitions; ++h) {
                const Matrix& cur = s.at(h);
                if (!(cur(x, y) > cur(x, z) + t)) continue;
                ++acc.checked[h - 1];
                const Matrix& next = s.at(h + 1);
                if (next(x, y) < next(x, z) - t) {
                    ++acc.violated[h - 1];
                    if (acc.recorded.size() < opt.max_recorded)
                        acc.recorded.push_back({x, y, z, h, next(x, y), next(x, z),
                                                next(x, z) - next(x, y)});
                }
            }
        });
    auto r = detail::finish(Property::order_consistency, s, t, parts, opt.max_recorded);
    r.sampled = sampled;
    return r;
}

/// Finite-iteration WLOA ordering bound: whenever K(x,y) >= K(x,z) at h,
/// K(x,y) >= (W_h / W_{h+1}) * K(x,z) at h + 1, with W_h the summed weights.
inline ViolationReport check_wloa_bound(const GramSeries& s, AnalysisOptions opt = {}) {
    if (s.spec.kind != KernelKind::wloa)
        throw InvalidInput("the WLOA bound applies only to WLOA series");
    detail::require_normalized(s, 2);
    if (s.size < 3) throw InvalidInput("bound check needs at least three graphs");
    const std::size_t transitions = s.depth() - 1;
    std::vector<double> ratio(transitions);
    for (std::size_t h = 1; h <= transitions; ++h)
        ratio[h - 1] = weight_total(s.spec, h) / weight_total(s.spec, h + 1);
    std::vector<detail::Accumulator> parts;
    const bool sampled = detail::for_each_triple(
        s.size, opt, parts, transitions,
        [&](std::size_t x, std::size_t y, std::size_t z, detail::Accumulator& acc) {
            for (std::size_t h = 1; h <= transitions; ++h) {
                const Matrix& cur = s.at(h);
                if (!(cur(x, y) >= cur(x, z))) continue;
                ++acc.checked[h - 1];
                const Matrix& next = s.at(h + 1);
                const double lhs = next(x, y);
                const double rhs = ratio[h - 1] * next(x, z);
                if (lhs < rhs - opt.tolerance) {
                    ++acc.violated[h - 1];
                    if (acc.recorded.size() < opt.max_recorded)
                        acc.recorded.push_back({x, y, z, h, lhs, rhs, rhs - lhs});
                }
            }
        });
    auto r = detail::finish(Property::wloa_bound, s, opt.tolerance, parts, opt.max_recorded);
    r.sampled = sampled;
    return r;
}

struct MarginCurve {
    /// margin[h - 1] = min over cross-class pairs of sqrt(2 - 2 K(h)).
    std::vector<double> margin;
    std::vector<std::pair<std::size_t, std::size_t>> argmin;
};

inline double representation_distance(double normalized_kernel) {
    return std::sqrt(std::max(0.0, 2.0 - 2.0 * normalized_kernel));
}

inline MarginCurve margin_curve(const GramSeries& s, std::span<const int> labels) {
    detail::require_normalized(s, 1);
    if (labels.size() != s.size) throw InvalidInput("label count does not match the Gram series");
    bool cross = false;
    for (std::size_t i = 1; i < labels.size() && !cross; ++i) cross = labels[i] != labels[0];
    if (!cross) throw InvalidInput("margin needs at least two classes");

    MarginCurve m;
    for (std::size_t h = 1; h <= s.depth(); ++h) {
        const Matrix& k = s.at(h);
        double best = std::numeric_limits<double>::infinity();
        std::pair<std::size_t, std::size_t> arg{0, 0};
        for (std::size_t i = 0; i < s.size; ++i)
            for (std::size_t j = i + 1; j < s.size; ++j) {
                if (labels[i] == labels[j]) continue;
                const double d = representation_distance(k(i, j));
                if (d < best) {
                    best = d;
                    arg = {i, j};
                }
            }
        m.margin.push_back(best);
        m.argmin.push_back(arg);
    }
    return m;
}

/// Normalized WL-subtree similarities of the literal two-iteration histogram
/// example: iteration 1 [200, 4] vs [4, 200]; iteration 2 [100, 100, 4] vs
/// [2, 2, 200]. Returns (K(1), K(2)); the second exceeds the first.
inline std::pair<double, double> reproduce_counterexample(bool swap = false) {
    enum : Color { a, b, c, d, e };
    std::vector<Histogram> g{Histogram{}, Histogram::from_counts({{a, 200}, {b, 4}}),
                             Histogram::from_counts({{c, 100}, {d, 100}, {e, 4}})};
    std::vector<Histogram> gp{Histogram{}, Histogram::from_counts({{a, 4}, {b, 200}}),
                              Histogram::from_counts({{c, 2}, {d, 2}, {e, 200}})};
    if (swap) std::swap(g, gp);
    auto similarity = [&](std::size_t h) {
        return normalize(subtree_kernel(g, gp, h), subtree_kernel(g, g, h), subtree_kernel(gp, gp, h));
    };
    return {similarity(1), similarity(2)};
}

namespace detail {

/// Appends `copies` disjoint copies of a component to an edge list.
inline void append_components(std::vector<Edge>& edges, std::size_t& nodes,
                              const std::vector<Edge>& component, std::size_t size,
                              std::size_t copies) {
    for (std::size_t c = 0; c < copies; ++c) {
        for (const auto& [u, v] : component) edges.emplace_back(nodes + u, nodes + v);
        nodes += size;
    }
}

inline std::vector<Edge> star_edges(std::size_t leaves) {
    std::vector<Edge> e;
    for (std::size_t v = 1; v <= leaves; ++v) e.emplace_back(0, v);
    return e;
}

inline std::vector<Edge> clique_edges(std::size_t n) {
    std::vector<Edge> e;
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = u + 1; v < n; ++v) e.emplace_back(u, v);
    return e;
}

}  // namespace detail

/// Two unlabeled graphs, built from isolated nodes, cliques, cycles and stars,
/// whose normalized WL-subtree similarity rises from 0.0400 (h = 1) to 0.0404
/// (h = 2) under uniform initial colors.
///
/// Graph 0: 61 K1 + 18 K4 + 16 C6. Graph 1: 38 K2 + 31 S6 + 28 S4 + 11 S3 +
/// 3 C5 + 1 S5, where Sm is a star with m leaves.
inline GraphCollection counterexample_collection() {
    using detail::append_components;
    GraphCollection c;
    c.name = "counterexample";
    c.class_count = 2;
    c.original_labels = {0, 1};
    {
        std::vector<Edge> e;
        std::size_t n = 0;
        append_components(e, n, {}, 1, 61);
        append_components(e, n, detail::clique_edges(4), 4, 18);
        append_components(e, n, detail::cycle_edges(6), 6, 16);
        c.graphs.push_back(LabeledGraph::from_edges(n, e, {}, 0));
    }
    {
        std::vector<Edge> e;
        std::size_t n = 0;
        append_components(e, n, detail::path_edges(2), 2, 38);
        append_components(e, n, detail::star_edges(6), 7, 31);
        append_components(e, n, detail::star_edges(4), 5, 28);
        append_components(e, n, detail::star_edges(3), 4, 11);
        append_components(e, n, detail::cycle_edges(5), 5, 3);
        append_components(e, n, detail::star_edges(5), 6, 1);
        c.graphs.push_back(LabeledGraph::from_edges(n, e, {}, 1));
    }
    return c;
}

}  // namespace igk
