// SPDX-License-Identifier: Apache-2.0
//
// Dense reverse-mode differentiation over row-major double matrices. A Tensor
// is a shared handle to a node of the computation graph; copying a Tensor
// aliases the node, as with framework tensors.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "igk/error.hpp"
#include "igk/matrix.hpp"

namespace igk::ad {

class Tensor {
    struct Node {
        std::size_t rows = 0;
        std::size_t cols = 0;
        std::vector<double> value;
        std::vector<double> grad;
        bool requires_grad = false;
        std::vector<std::shared_ptr<Node>> parents;
        /// Reads this node's grad and accumulates into the parents' grads.
        std::function<void(Node&)> backward;
    };

public:
    Tensor() : Tensor(0, 0) {}

    Tensor(std::size_t rows, std::size_t cols, double fill = 0.0, bool requires_grad = false)
        : node_(std::make_shared<Node>()) {
        node_->rows = rows;
        node_->cols = cols;
        node_->value.assign(rows * cols, fill);
        node_->grad.assign(rows * cols, 0.0);
        node_->requires_grad = requires_grad;
    }

    Tensor(std::size_t rows, std::size_t cols, std::vector<double> values, bool requires_grad = false)
        : Tensor(rows, cols, 0.0, requires_grad) {
        if (values.size() != rows * cols) throw ShapeError("value count does not match shape");
        node_->value = std::move(values);
    }

    static Tensor from_matrix(const Matrix& m, bool requires_grad = false) {
        return Tensor(m.rows(), m.cols(), m.data(), requires_grad);
    }

    static Tensor scalar(double v, bool requires_grad = false) {
        return Tensor(1, 1, v, requires_grad);
    }

    std::size_t rows() const noexcept { return node_->rows; }
    std::size_t cols() const noexcept { return node_->cols; }
    std::size_t size() const noexcept { return node_->value.size(); }
    bool requires_grad() const noexcept { return node_->requires_grad; }

    double operator()(std::size_t r, std::size_t c) const { return node_->value[r * node_->cols + c]; }
    double item() const {
        if (size() != 1) throw ShapeError("item() on a non-scalar tensor");
        return node_->value[0];
    }

    const std::vector<double>& values() const noexcept { return node_->value; }
    /// Mutable access for optimizers and finite differences; does not touch the graph.
    std::vector<double>& mutable_values() noexcept { return node_->value; }
    const std::vector<double>& grad() const noexcept { return node_->grad; }

    Matrix to_matrix() const {
        Matrix m(rows(), cols());
        m.data() = node_->value;
        return m;
    }

    void zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

    /// Constant copy of the values, cut from the graph.
    Tensor detach() const { return Tensor(rows(), cols(), node_->value, false); }

    bool same_node(const Tensor& o) const noexcept { return node_ == o.node_; }

    /// Fills grads of every requires-grad leaf reachable from this scalar.
    /// Leaf grads accumulate across calls; intermediate grads are recomputed.
    void backward() const {
        if (size() != 1) throw ShapeError("backward() needs a scalar loss");
        if (!node_->requires_grad) return;

        // Iterative post-order DFS; parents are visited in declaration order so
        // the accumulation order is fixed.
        std::vector<Node*> order;
        std::unordered_set<Node*> seen;
        std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
        seen.insert(node_.get());
        while (!stack.empty()) {
            auto& [n, next] = stack.back();
            if (next < n->parents.size()) {
                Node* p = n->parents[next++].get();
                if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
            } else {
                order.push_back(n);
                stack.pop_back();
            }
        }
        for (Node* n : order)
            if (n->backward) std::fill(n->grad.begin(), n->grad.end(), 0.0);
        node_->grad[0] = node_->backward ? 1.0 : node_->grad[0] + 1.0;
        for (auto it = order.rbegin(); it != order.rend(); ++it)
            if ((*it)->backward) (*it)->backward(**it);
    }

private:
    friend class OpBuilder;
    std::shared_ptr<Node> node_;
};

/// Internal helper that wires a result node to its parents.
class OpBuilder {
public:
    using Node = Tensor::Node;

    static Tensor make(std::size_t rows, std::size_t cols, std::vector<double> value,
                       std::vector<Tensor> parents, std::function<void(Node&)> backward) {
        Tensor out(rows, cols, std::move(value), false);
        bool any = false;
        for (const auto& p : parents) any = any || p.requires_grad();
        if (any) {
            out.node_->requires_grad = true;
            for (auto& p : parents) out.node_->parents.push_back(p.node_);
            out.node_->backward = std::move(backward);
        }
        return out;
    }

    static Node& node(const Tensor& t) { return *t.node_; }
    static Node& parent(Node& n, std::size_t i) { return *n.parents[i]; }
};

namespace detail {

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ShapeError(std::string(op) + ": shape (" + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + ") vs (" + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()) + ")");
}

/// Unary elementwise op with derivative expressed from (input, output).
template <typename F, typename D>
Tensor unary(const Tensor& x, F f, D df) {
    std::vector<double> v(x.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(x.values()[i]);
    return OpBuilder::make(x.rows(), x.cols(), std::move(v), {x}, [df](OpBuilder::Node& n) {
        auto& p = OpBuilder::parent(n, 0);
        if (!p.requires_grad) return;
        for (std::size_t i = 0; i < n.grad.size(); ++i) p.grad[i] += n.grad[i] * df(p.value[i], n.value[i]);
    });
}

}  // namespace detail

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows())
        throw ShapeError("matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                         std::to_string(b.rows()) + " differ");
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    std::vector<double> out(n * m, 0.0);
    const auto& av = a.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double x = av[i * k + p];
            if (x == 0.0) continue;
            for (std::size_t j = 0; j < m; ++j) out[i * m + j] += x * bv[p * m + j];
        }
    return OpBuilder::make(n, m, std::move(out), {a, b}, [n, k, m](OpBuilder::Node& node) {
        auto& pa = OpBuilder::parent(node, 0);
        auto& pb = OpBuilder::parent(node, 1);
        const auto& g = node.grad;
        if (pa.requires_grad)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < m; ++j) s += g[i * m + j] * pb.value[p * m + j];
                    pa.grad[i * k + p] += s;
                }
        if (pb.requires_grad)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    const double x = pa.value[i * k + p];
                    if (x == 0.0) continue;
                    for (std::size_t j = 0; j < m; ++j) pb.grad[p * m + j] += x * g[i * m + j];
                }
    });
}

inline Tensor add(const Tensor& a, const Tensor& b) {
    detail::require_same_shape(a, b, "add");
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] + b.values()[i];
    return OpBuilder::make(a.rows(), a.cols(), std::move(v), {a, b}, [](OpBuilder::Node& n) {
        for (std::size_t k = 0; k < 2; ++k) {
            auto& p = OpBuilder::parent(n, k);
            if (!p.requires_grad) continue;
            for (std::size_t i = 0; i < n.grad.size(); ++i) p.grad[i] += n.grad[i];
        }
    });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    detail::require_same_shape(a, b, "sub");
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] - b.values()[i];
    return OpBuilder::make(a.rows(), a.cols(), std::move(v), {a, b}, [](OpBuilder::Node& n) {
        auto& pa = OpBuilder::parent(n, 0);
        auto& pb = OpBuilder::parent(n, 1);
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            if (pa.requires_grad) pa.grad[i] += n.grad[i];
            if (pb.requires_grad) pb.grad[i] -= n.grad[i];
        }
    });
}

inline Tensor elementwise_mul(const Tensor& a, const Tensor& b) {
    detail::require_same_shape(a, b, "elementwise_mul");
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] * b.values()[i];
    return OpBuilder::make(a.rows(), a.cols(), std::move(v), {a, b}, [](OpBuilder::Node& n) {
        auto& pa = OpBuilder::parent(n, 0);
        auto& pb = OpBuilder::parent(n, 1);
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            if (pa.requires_grad) pa.grad[i] += n.grad[i] * pb.value[i];
            if (pb.requires_grad) pb.grad[i] += n.grad[i] * pa.value[i];
        }
    });
}

inline Tensor scalar_mul(const Tensor& x, double c) {
    return detail::unary(x, [c](double v) { return c * v; }, [c](double, double) { return c; });
}

inline Tensor add_scalar(const Tensor& x, double c) {
    return detail::unary(x, [c](double v) { return v + c; }, [](double, double) { return 1.0; });
}

inline Tensor relu(const Tensor& x) {
    return detail::unary(
        x, [](double v) { return v > 0.0 ? v : 0.0; },
        [](double in, double) { return in > 0.0 ? 1.0 : 0.0; });
}

inline Tensor sigmoid(const Tensor& x) {
    return detail::unary(
        x,
        [](double v) {
            if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
            const double e = std::exp(v);
            return e / (1.0 + e);
        },
        [](double, double s) { return s * (1.0 - s); });
}

inline Tensor log(const Tensor& x) {
    return detail::unary(
        x, [](double v) { return std::log(v); }, [](double in, double) { return 1.0 / in; });
}

inline Tensor transpose(const Tensor& x) {
    const std::size_t r = x.rows(), c = x.cols();
    std::vector<double> v(x.size());
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) v[j * r + i] = x.values()[i * c + j];
    return OpBuilder::make(c, r, std::move(v), {x}, [r, c](OpBuilder::Node& n) {
        auto& p = OpBuilder::parent(n, 0);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) p.grad[i * c + j] += n.grad[j * r + i];
    });
}

inline Tensor reduce_sum(const Tensor& x) {
    double s = 0.0;
    for (double v : x.values()) s += v;
    return OpBuilder::make(1, 1, {s}, {x}, [](OpBuilder::Node& n) {
        auto& p = OpBuilder::parent(n, 0);
        for (double& g : p.grad) g += n.grad[0];
    });
}

inline Tensor reduce_mean(const Tensor& x) {
    if (x.size() == 0) throw ShapeError("reduce_mean of an empty tensor");
    const double inv = 1.0 / static_cast<double>(x.size());
    double s = 0.0;
    for (double v : x.values()) s += v;
    return OpBuilder::make(1, 1, {s * inv}, {x}, [inv](OpBuilder::Node& n) {
        auto& p = OpBuilder::parent(n, 0);
        for (double& g : p.grad) g += n.grad[0] * inv;
    });
}

/// Row norm floor of row_l2_normalize.
inline constexpr double kNormEpsilon = 1e-12;

/// Divides each row by max(||row||_2, kNormEpsilon).
inline Tensor row_l2_normalize(const Tensor& x) {
    const std::size_t r = x.rows(), c = x.cols();
    std::vector<double> norms(r), v(x.size());
    for (std::size_t i = 0; i < r; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += x.values()[i * c + j] * x.values()[i * c + j];
        norms[i] = std::max(std::sqrt(s), kNormEpsilon);
        for (std::size_t j = 0; j < c; ++j) v[i * c + j] = x.values()[i * c + j] / norms[i];
    }
    return OpBuilder::make(r, c, std::move(v), {x}, [r, c, norms](OpBuilder::Node& n) {
        auto& p = OpBuilder::parent(n, 0);
        for (std::size_t i = 0; i < r; ++i) {
            const double* y = &n.value[i * c];
            const double* g = &n.grad[i * c];
            double* out = &p.grad[i * c];
            // Below the floor the map is linear with slope 1/eps.
            const bool clamped = norms[i] <= kNormEpsilon;
            double yg = 0.0;
            if (!clamped)
                for (std::size_t j = 0; j < c; ++j) yg += y[j] * g[j];
            for (std::size_t j = 0; j < c; ++j) out[j] += (g[j] - y[j] * yg) / norms[i];
        }
    });
}

/// Mean of the rows sharing a group id. `groups` must be ascending with ids in
/// [0, group_count); a group without rows yields a zero row.
inline Tensor segment_mean(const Tensor& x, std::span<const std::size_t> groups,
                           std::size_t group_count) {
    if (groups.size() != x.rows()) throw ShapeError("segment_mean: one group id per row required");
    for (std::size_t i = 0; i < groups.size(); ++i) {
        if (groups[i] >= group_count) throw ShapeError("segment_mean: group id out of range");
        if (i > 0 && groups[i] < groups[i - 1]) throw ShapeError("segment_mean: group ids must be ascending");
    }
    const std::size_t c = x.cols();
    std::vector<double> counts(group_count, 0.0);
    for (auto g : groups) counts[g] += 1.0;
    std::vector<double> v(group_count * c, 0.0);
    for (std::size_t i = 0; i < groups.size(); ++i)
        for (std::size_t j = 0; j < c; ++j) v[groups[i] * c + j] += x.values()[i * c + j];
    for (std::size_t g = 0; g < group_count; ++g)
        if (counts[g] > 0)
            for (std::size_t j = 0; j < c; ++j) v[g * c + j] /= counts[g];
    std::vector<std::size_t> ids(groups.begin(), groups.end());
    return OpBuilder::make(group_count, c, std::move(v), {x}, [ids, counts, c](OpBuilder::Node& n) {
        auto& p = OpBuilder::parent(n, 0);
        for (std::size_t i = 0; i < ids.size(); ++i)
            for (std::size_t j = 0; j < c; ++j) p.grad[i * c + j] += n.grad[ids[i] * c + j] / counts[ids[i]];
    });
}

/// Mean over rows of -log softmax(logits)[label].
inline Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
    const std::size_t n = logits.rows(), c = logits.cols();
    if (labels.size() != n) throw ShapeError("softmax_cross_entropy: one label per row required");
    if (n == 0) throw ShapeError("softmax_cross_entropy: empty batch");
    std::vector<double> probs(n * c);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c)
            throw ShapeError("softmax_cross_entropy: label out of range");
        const double* z = &logits.values()[i * c];
        const double mx = *std::max_element(z, z + c);
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += std::exp(z[j] - mx);
        const double lse = mx + std::log(s);
        for (std::size_t j = 0; j < c; ++j) probs[i * c + j] = std::exp(z[j] - lse);
        loss += lse - z[labels[i]];
    }
    const double inv = 1.0 / static_cast<double>(n);
    std::vector<int> y(labels.begin(), labels.end());
    return OpBuilder::make(1, 1, {loss * inv}, {logits}, [probs, y, c, inv](OpBuilder::Node& node) {
        auto& p = OpBuilder::parent(node, 0);
        const double g = node.grad[0] * inv;
        for (std::size_t i = 0; i < y.size(); ++i)
            for (std::size_t j = 0; j < c; ++j)
                p.grad[i * c + j] += g * (probs[i * c + j] - (static_cast<int>(j) == y[i] ? 1.0 : 0.0));
    });
}

// ---------------------------------------------------------------------------
// Finite-difference gradient check
// ---------------------------------------------------------------------------

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
    /// Coordinates within 10 * eps of zero, skipped as potential relu kinks.
    std::size_t skipped = 0;
    std::size_t worst_index = 0;
};

/// Compares backward() grads of a scalar function to central differences,
/// coordinate by coordinate. `f` must be deterministic; that is not checked.
template <typename F>
GradCheckResult grad_check(F&& f, Tensor& x, double eps = 1e-5) {
    if (!(eps >= 1e-7 && eps <= 1e-3)) throw InvalidInput("grad_check eps must lie in [1e-7, 1e-3]");
    if (!x.requires_grad()) throw InvalidInput("grad_check input must require grad");
    x.zero_grad();
    Tensor y = f(x);
    if (y.size() != 1) throw ShapeError("grad_check needs a scalar function");
    y.backward();
    const std::vector<double> analytic = x.grad();

    GradCheckResult r;
    auto& xs = x.mutable_values();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double orig = xs[i];
        if (std::abs(orig) < 10.0 * eps) {
            ++r.skipped;
            continue;
        }
        xs[i] = orig + eps;
        const double up = f(x).item();
        xs[i] = orig - eps;
        const double down = f(x).item();
        xs[i] = orig;
        const double numeric = (up - down) / (2.0 * eps);
        const double a = analytic[i];
        const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
        if (err > r.max_relative_error) {
            r.max_relative_error = err;
            r.worst_index = i;
        }
        ++r.checked;
    }
    return r;
}

}  // namespace igk::ad
