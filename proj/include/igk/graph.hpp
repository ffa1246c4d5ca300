// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "igk/error.hpp"
#include "igk/rng.hpp"

namespace igk {

using NodeId = std::uint32_t;
using Label = std::int64_t;
using Edge = std::pair<std::size_t, std::size_t>;

/// Simple undirected graph with categorical node labels and a class label.
/// Immutable once built; every instance satisfies symmetry, no self-loops,
/// and duplicate-free sorted neighbor lists.
class LabeledGraph {
public:
    /// Builds from an undirected edge list. Duplicates (in either direction)
    /// are merged; a self-loop or out-of-range endpoint throws InvalidSpec.
    static LabeledGraph from_edges(std::size_t node_count, std::span<const Edge> edges,
                                   std::vector<Label> node_labels, int graph_label = 0) {
        if (node_count == 0) throw InvalidSpec("graph must have at least one node");
        if (node_labels.empty()) node_labels.assign(node_count, 1);
        if (node_labels.size() != node_count)
            throw InvalidSpec("node label count does not match node count");

        LabeledGraph g;
        g.adjacency_.resize(node_count);
        for (const auto& [u, v] : edges) {
            if (u >= node_count || v >= node_count) throw InvalidSpec("edge endpoint out of range");
            if (u == v) throw InvalidSpec("self-loop on node " + std::to_string(u));
            g.adjacency_[u].push_back(static_cast<NodeId>(v));
            g.adjacency_[v].push_back(static_cast<NodeId>(u));
        }
        for (auto& nbrs : g.adjacency_) {
            std::sort(nbrs.begin(), nbrs.end());
            nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
        }
        g.node_labels_ = std::move(node_labels);
        g.graph_label_ = graph_label;
        return g;
    }

    std::size_t node_count() const noexcept { return adjacency_.size(); }

    std::size_t edge_count() const noexcept {
        std::size_t twice = 0;
        for (const auto& n : adjacency_) twice += n.size();
        return twice / 2;
    }

    std::span<const NodeId> neighbors(std::size_t v) const { return adjacency_[v]; }
    std::size_t degree(std::size_t v) const { return adjacency_[v].size(); }
    const std::vector<std::vector<NodeId>>& adjacency() const noexcept { return adjacency_; }

    const std::vector<Label>& node_labels() const noexcept { return node_labels_; }
    int graph_label() const noexcept { return graph_label_; }

    /// Each undirected edge once, as (u, v) with u < v, in ascending order.
    std::vector<Edge> edges() const {
        std::vector<Edge> out;
        for (std::size_t u = 0; u < adjacency_.size(); ++u)
            for (NodeId v : adjacency_[u])
                if (u < v) out.emplace_back(u, v);
        return out;
    }

    /// Relabels nodes: node v of this graph becomes node perm[v].
    LabeledGraph permuted(std::span<const std::size_t> perm) const {
        std::vector<Edge> e;
        for (const auto& [u, v] : edges()) e.emplace_back(perm[u], perm[v]);
        std::vector<Label> labels(node_count());
        for (std::size_t v = 0; v < node_count(); ++v) labels[perm[v]] = node_labels_[v];
        return from_edges(node_count(), e, std::move(labels), graph_label_);
    }

    bool operator==(const LabeledGraph&) const = default;

private:
    LabeledGraph() = default;

    std::vector<std::vector<NodeId>> adjacency_;
    std::vector<Label> node_labels_;
    int graph_label_ = 0;
};

/// A dataset: graphs with contiguous class labels in [0, class_count).
struct GraphCollection {
    std::vector<LabeledGraph> graphs;
    int class_count = 0;
    std::string name;
    /// original_labels[c] is the dataset's label for class index c.
    std::vector<Label> original_labels;

    std::size_t size() const noexcept { return graphs.size(); }

    std::vector<int> labels() const {
        std::vector<int> out;
        out.reserve(graphs.size());
        for (const auto& g : graphs) out.push_back(g.graph_label());
        return out;
    }

    void validate() const {
        if (graphs.empty()) throw InvalidSpec("collection '" + name + "' is empty");
        for (std::size_t i = 0; i < graphs.size(); ++i) {
            const int y = graphs[i].graph_label();
            if (y < 0 || y >= class_count)
                throw InvalidSpec("graph " + std::to_string(i) + " has label outside [0, class_count)");
        }
    }

    /// Subset in the given index order; class labels are kept as-is.
    GraphCollection subset(std::span<const std::size_t> indices) const {
        GraphCollection out{{}, class_count, name, original_labels};
        for (auto i : indices) out.graphs.push_back(graphs.at(i));
        return out;
    }
};

/// Stable 64-bit FNV-1a digest of the collection's structure and labels,
/// rendered as 16 hex digits.
inline std::string fingerprint(const GraphCollection& c) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t x) {
        for (int b = 0; b < 8; ++b) {
            h ^= (x >> (8 * b)) & 0xffU;
            h *= 0x100000001b3ULL;
        }
    };
    mix(c.graphs.size());
    for (const auto& g : c.graphs) {
        mix(g.node_count());
        mix(static_cast<std::uint64_t>(g.graph_label()));
        for (std::size_t v = 0; v < g.node_count(); ++v) {
            mix(static_cast<std::uint64_t>(g.node_labels()[v]));
            mix(g.degree(v));
            for (NodeId u : g.neighbors(v)) mix(u);
        }
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = hex[h & 0xf];
    return out;
}

// ---------------------------------------------------------------------------
// TU dataset text format
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::int64_t parse_int(const std::string& token, const std::filesystem::path& file,
                              std::size_t line) {
    const std::string t = trim(token);
    std::size_t used = 0;
    std::int64_t value = 0;
    try {
        value = std::stoll(t, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (t.empty() || used != t.size())
        throw ParseError(file.filename().string() + ":" + std::to_string(line) +
                         ": expected an integer, got '" + t + "'");
    return value;
}

/// Reads one integer per non-blank line.
inline std::vector<std::int64_t> read_column(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ParseError("cannot open " + file.string());
    std::vector<std::int64_t> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        // Some TU files carry extra comma-separated columns; the first one is the label.
        out.push_back(parse_int(line.substr(0, line.find(',')), file, lineno));
    }
    return out;
}

}  // namespace detail

/// Reads `<name>_A.txt`, `<name>_graph_indicator.txt`, `<name>_graph_labels.txt`
/// and, when present, `<name>_node_labels.txt` from `directory`.
///
/// Node ids in the files are 1-indexed and global; the result uses 0-indexed
/// per-graph ids in order of appearance. Missing node labels default to 1.
/// Graph labels are remapped to [0, class_count) in ascending order of the
/// original value.
inline GraphCollection parse_tu_dataset(const std::filesystem::path& directory,
                                        const std::string& name) {
    namespace fs = std::filesystem;
    const fs::path a_file = directory / (name + "_A.txt");
    const fs::path ind_file = directory / (name + "_graph_indicator.txt");
    const fs::path gl_file = directory / (name + "_graph_labels.txt");
    const fs::path nl_file = directory / (name + "_node_labels.txt");
    for (const auto& f : {a_file, ind_file, gl_file})
        if (!fs::exists(f)) throw ParseError("missing mandatory file " + f.string());

    const auto indicator = detail::read_column(ind_file);
    const auto graph_labels = detail::read_column(gl_file);
    const std::size_t total_nodes = indicator.size();
    const std::size_t graph_count = graph_labels.size();
    if (graph_count == 0) throw ParseError(gl_file.string() + ": no graphs");

    std::vector<std::int64_t> node_labels;
    if (fs::exists(nl_file)) {
        node_labels = detail::read_column(nl_file);
        if (node_labels.size() != total_nodes)
            throw ParseError(nl_file.string() + ": expected " + std::to_string(total_nodes) +
                             " node labels, found " + std::to_string(node_labels.size()));
    } else {
        node_labels.assign(total_nodes, 1);
    }

    // Global node -> (graph, local index).
    std::vector<std::size_t> graph_of(total_nodes), local_of(total_nodes);
    std::vector<std::size_t> sizes(graph_count, 0);
    for (std::size_t v = 0; v < total_nodes; ++v) {
        const auto gid = indicator[v];
        if (gid < 1 || static_cast<std::size_t>(gid) > graph_count)
            throw ParseError(ind_file.filename().string() + ":" + std::to_string(v + 1) +
                             ": graph id " + std::to_string(gid) + " outside [1, " +
                             std::to_string(graph_count) + "]");
        graph_of[v] = static_cast<std::size_t>(gid - 1);
        local_of[v] = sizes[graph_of[v]]++;
    }
    for (std::size_t g = 0; g < graph_count; ++g)
        if (sizes[g] == 0) throw ParseError("graph " + std::to_string(g + 1) + " has no nodes");

    std::vector<std::vector<Edge>> edges(graph_count);
    {
        std::ifstream in(a_file);
        if (!in) throw ParseError("cannot open " + a_file.string());
        std::string line;
        std::size_t lineno = 0;
        const std::string fname = a_file.filename().string();
        while (std::getline(in, line)) {
            ++lineno;
            if (detail::trim(line).empty()) continue;
            const auto comma = line.find(',');
            if (comma == std::string::npos)
                throw ParseError(fname + ":" + std::to_string(lineno) + ": expected 'u, v'");
            const auto u = detail::parse_int(line.substr(0, comma), a_file, lineno);
            const auto v = detail::parse_int(line.substr(comma + 1), a_file, lineno);
            const auto in_range = [&](std::int64_t x) {
                return x >= 1 && static_cast<std::size_t>(x) <= total_nodes;
            };
            if (!in_range(u) || !in_range(v))
                throw ParseError(fname + ":" + std::to_string(lineno) + ": node id out of range");
            if (u == v)
                throw ParseError(fname + ":" + std::to_string(lineno) + ": self-loop on node " +
                                 std::to_string(u));
            const auto gu = graph_of[static_cast<std::size_t>(u - 1)];
            const auto gv = graph_of[static_cast<std::size_t>(v - 1)];
            if (gu != gv)
                throw ParseError(fname + ":" + std::to_string(lineno) + ": edge (" +
                                 std::to_string(u) + ", " + std::to_string(v) +
                                 ") crosses graphs " + std::to_string(gu + 1) + " and " +
                                 std::to_string(gv + 1));
            edges[gu].emplace_back(local_of[static_cast<std::size_t>(u - 1)],
                                   local_of[static_cast<std::size_t>(v - 1)]);
        }
    }

    std::vector<std::int64_t> distinct = graph_labels;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    std::vector<std::vector<Label>> labels(graph_count);
    for (std::size_t g = 0; g < graph_count; ++g) labels[g].reserve(sizes[g]);
    for (std::size_t v = 0; v < total_nodes; ++v) labels[graph_of[v]].push_back(node_labels[v]);

    GraphCollection out;
    out.name = name;
    out.class_count = static_cast<int>(distinct.size());
    out.original_labels = distinct;
    out.graphs.reserve(graph_count);
    for (std::size_t g = 0; g < graph_count; ++g) {
        const auto cls = std::lower_bound(distinct.begin(), distinct.end(), graph_labels[g]) -
                         distinct.begin();
        out.graphs.push_back(LabeledGraph::from_edges(sizes[g], edges[g], std::move(labels[g]),
                                                      static_cast<int>(cls)));
    }
    out.validate();
    return out;
}

/// Writes the collection in TU layout (both edge directions, original class
/// labels when known). Node labels are always written.
inline void write_tu_dataset(const GraphCollection& c, const std::filesystem::path& directory,
                             const std::string& name) {
    std::filesystem::create_directories(directory);
    std::ofstream a(directory / (name + "_A.txt"));
    std::ofstream ind(directory / (name + "_graph_indicator.txt"));
    std::ofstream gl(directory / (name + "_graph_labels.txt"));
    std::ofstream nl(directory / (name + "_node_labels.txt"));
    if (!a || !ind || !gl || !nl) throw ParseError("cannot write into " + directory.string());

    std::size_t offset = 1;
    for (std::size_t g = 0; g < c.graphs.size(); ++g) {
        const auto& graph = c.graphs[g];
        for (std::size_t v = 0; v < graph.node_count(); ++v) {
            ind << g + 1 << '\n';
            nl << graph.node_labels()[v] << '\n';
            for (NodeId u : graph.neighbors(v)) a << offset + v << ", " << offset + u << '\n';
        }
        const auto cls = static_cast<std::size_t>(graph.graph_label());
        gl << (cls < c.original_labels.size() ? c.original_labels[cls]
                                              : static_cast<Label>(cls))
           << '\n';
        offset += graph.node_count();
    }
}

// ---------------------------------------------------------------------------
// Synthetic corpora
// ---------------------------------------------------------------------------

enum class Family {
    cycle,             ///< one class of cycles
    path,              ///< one class of paths
    cycles_vs_paths,   ///< class 0 cycles, class 1 paths
    erdos_renyi,       ///< one class of G(n, p)
    er_vs_ba,          ///< class 0 G(n, p) at matched density, class 1 Barabasi-Albert
    split_by_density,  ///< class 0 G(n, p_sparse), class 1 G(n, p_dense)
};

enum class NodeLabelRule { constant, degree };

struct SyntheticSpec {
    Family family = Family::cycle;
    std::vector<std::size_t> sizes;
    /// Number of graphs; 0 means one graph per size and class.
    std::size_t count = 0;
    double edge_probability = 0.2;
    double dense_probability = 0.4;
    std::size_t ba_attach = 2;
    NodeLabelRule node_labels = NodeLabelRule::degree;
    /// Apply a seeded random node relabeling to every graph.
    bool permute_nodes = false;
};

inline int class_count_of(Family f) {
    switch (f) {
        case Family::cycle:
        case Family::path:
        case Family::erdos_renyi:
            return 1;
        default:
            return 2;
    }
}

inline std::string to_string(Family f) {
    switch (f) {
        case Family::cycle: return "cycle";
        case Family::path: return "path";
        case Family::cycles_vs_paths: return "cycles_vs_paths";
        case Family::erdos_renyi: return "erdos_renyi";
        case Family::er_vs_ba: return "er_vs_ba";
        case Family::split_by_density: return "split_by_density";
    }
    return "?";
}

/// Accepts both "cycles_vs_paths" and "cycles-vs-paths".
inline std::optional<Family> family_from_string(std::string s) {
    std::replace(s.begin(), s.end(), '-', '_');
    for (auto f : {Family::cycle, Family::path, Family::cycles_vs_paths, Family::erdos_renyi,
                   Family::er_vs_ba, Family::split_by_density})
        if (to_string(f) == s) return f;
    return std::nullopt;
}

namespace detail {

inline std::vector<Edge> cycle_edges(std::size_t n) {
    std::vector<Edge> e;
    for (std::size_t v = 0; v < n; ++v) e.emplace_back(v, (v + 1) % n);
    return e;
}

inline std::vector<Edge> path_edges(std::size_t n) {
    std::vector<Edge> e;
    for (std::size_t v = 0; v + 1 < n; ++v) e.emplace_back(v, v + 1);
    return e;
}

inline std::vector<Edge> gnp_edges(std::size_t n, double p, Rng& rng) {
    std::vector<Edge> e;
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = u + 1; v < n; ++v)
            if (rng.bernoulli(p)) e.emplace_back(u, v);
    return e;
}

/// Preferential attachment seeded with a clique on m + 1 nodes.
inline std::vector<Edge> ba_edges(std::size_t n, std::size_t m, Rng& rng) {
    std::vector<Edge> e;
    std::vector<std::size_t> endpoints;
    const std::size_t seed = std::min(n, m + 1);
    for (std::size_t u = 0; u < seed; ++u)
        for (std::size_t v = u + 1; v < seed; ++v) {
            e.emplace_back(u, v);
            endpoints.push_back(u);
            endpoints.push_back(v);
        }
    for (std::size_t v = seed; v < n; ++v) {
        std::vector<std::size_t> targets;
        while (targets.size() < m) {
            const auto t = endpoints[static_cast<std::size_t>(rng.below(endpoints.size()))];
            if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
        }
        std::sort(targets.begin(), targets.end());
        for (auto t : targets) {
            e.emplace_back(t, v);
            endpoints.push_back(t);
            endpoints.push_back(v);
        }
    }
    return e;
}

inline std::size_t ba_edge_count(std::size_t n, std::size_t m) {
    const std::size_t seed = std::min(n, m + 1);
    return seed * (seed - 1) / 2 + (n - seed) * m;
}

}  // namespace detail

/// Deterministic function of (spec, seed). For two-class families graph g has
/// class g % 2; sizes are cycled per class pair.
inline GraphCollection generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    if (spec.sizes.empty()) throw InvalidSpec("synthetic spec needs at least one size");
    for (auto s : spec.sizes)
        if (s < 3) throw InvalidSpec("graph size " + std::to_string(s) + " < 3");
    if (spec.family == Family::er_vs_ba && spec.ba_attach == 0)
        throw InvalidSpec("ba_attach must be positive");

    const int classes = class_count_of(spec.family);
    const std::size_t count =
        spec.count > 0 ? spec.count : spec.sizes.size() * static_cast<std::size_t>(classes);

    Rng rng(seed);
    GraphCollection out;
    out.name = "synthetic_" + to_string(spec.family);
    out.class_count = classes;
    out.original_labels.resize(static_cast<std::size_t>(classes));
    std::iota(out.original_labels.begin(), out.original_labels.end(), 0);

    for (std::size_t g = 0; g < count; ++g) {
        const int cls = static_cast<int>(g % static_cast<std::size_t>(classes));
        const std::size_t n = spec.sizes[(g / static_cast<std::size_t>(classes)) % spec.sizes.size()];
        std::vector<Edge> edges;
        switch (spec.family) {
            case Family::cycle: edges = detail::cycle_edges(n); break;
            case Family::path: edges = detail::path_edges(n); break;
            case Family::cycles_vs_paths:
                edges = cls == 0 ? detail::cycle_edges(n) : detail::path_edges(n);
                break;
            case Family::erdos_renyi: edges = detail::gnp_edges(n, spec.edge_probability, rng); break;
            case Family::er_vs_ba: {
                const std::size_t m = std::min(spec.ba_attach, n - 1);
                if (cls == 0) {
                    const double p = static_cast<double>(detail::ba_edge_count(n, m)) /
                                     static_cast<double>(n * (n - 1) / 2);
                    edges = detail::gnp_edges(n, p, rng);
                } else {
                    edges = detail::ba_edges(n, m, rng);
                }
                break;
            }
            case Family::split_by_density:
                edges = detail::gnp_edges(
                    n, cls == 0 ? spec.edge_probability : spec.dense_probability, rng);
                break;
        }
        auto graph = LabeledGraph::from_edges(n, edges, {}, cls);
        if (spec.node_labels == NodeLabelRule::degree) {
            std::vector<Label> deg(n);
            for (std::size_t v = 0; v < n; ++v) deg[v] = static_cast<Label>(graph.degree(v));
            graph = LabeledGraph::from_edges(n, edges, std::move(deg), cls);
        }
        if (spec.permute_nodes) {
            std::vector<std::size_t> perm(n);
            std::iota(perm.begin(), perm.end(), 0);
            rng.shuffle(perm);
            graph = graph.permuted(perm);
        }
        out.graphs.push_back(std::move(graph));
    }
    out.validate();
    return out;
}

}  // namespace igk
