#pragma once

// Dense f64 tensors with reverse-mode automatic differentiation.
//
// Tensors are immutable values: every operation returns a fresh tensor and
// records enough on the graph to replay gradients without recomputing
// forward activations. A graph instance belongs to one logical thread.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "pmafl/errors.hpp"

namespace pmafl {

using Shape = std::vector<int64_t>;

inline int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

namespace detail {

struct TensorData;
using TensorDataPtr = std::shared_ptr<TensorData>;

// Backward rule: upstream gradient (flat, output-shaped) -> one flat
// gradient per parent, in parent order. Captures cache the local partials.
using Vjp = std::function<std::vector<std::vector<double>>(const std::vector<double>&)>;

struct TensorData {
    Shape shape;
    std::vector<double> values;
    bool requires_grad = false;
    std::vector<TensorDataPtr> parents;
    Vjp vjp;

    bool tracked() const { return requires_grad || static_cast<bool>(vjp); }
};

}  // namespace detail

class GradMap;
class Tensor;
GradMap backward(const Tensor& root);

class Tensor {
public:
    Tensor() : p_(std::make_shared<detail::TensorData>()) {}

    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false) {
        if (shape_numel(shape) != static_cast<int64_t>(values.size())) {
            throw ShapeError("tensor: shape " + shape_str(shape) + " wants " +
                             std::to_string(shape_numel(shape)) + " values, got " +
                             std::to_string(values.size()));
        }
        Tensor t;
        t.p_->shape = std::move(shape);
        t.p_->values = std::move(values);
        t.p_->requires_grad = requires_grad;
        return t;
    }

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        auto n = static_cast<size_t>(shape_numel(shape));
        return from(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
    }

    static Tensor full(Shape shape, double v) {
        auto n = static_cast<size_t>(shape_numel(shape));
        return from(std::move(shape), std::vector<double>(n, v));
    }

    static Tensor ones(Shape shape) { return full(std::move(shape), 1.0); }

    static Tensor scalar(double v) { return from({}, {v}); }

    const Shape& shape() const { return p_->shape; }
    int64_t numel() const { return static_cast<int64_t>(p_->values.size()); }
    int64_t rank() const { return static_cast<int64_t>(p_->shape.size()); }
    int64_t dim(size_t i) const { return p_->shape[i]; }
    bool requires_grad() const { return p_->requires_grad; }
    bool tracked() const { return p_->tracked(); }

    const std::vector<double>& data() const { return p_->values; }
    double at(int64_t i) const { return p_->values[static_cast<size_t>(i)]; }
    double at(int64_t r, int64_t c) const {
        return p_->values[static_cast<size_t>(r * p_->shape[1] + c)];
    }

    double item() const {
        if (numel() != 1) {
            throw ShapeError("item: tensor " + shape_str(shape()) + " is not scalar");
        }
        return p_->values[0];
    }

    bool is_scalar() const { return numel() == 1 && rank() == 0; }

    // Same values, no grad flag, no graph history.
    Tensor detach() const { return from(p_->shape, p_->values, false); }

    const detail::TensorData* id() const { return p_.get(); }

private:
    detail::TensorDataPtr p_;

    friend Tensor make_op_output(Shape shape, std::vector<double> values,
                                 const std::vector<Tensor>& inputs, detail::Vjp vjp);
    friend class GradMap;
    friend GradMap backward(const Tensor& root);
};

inline Tensor make_op_output(Shape shape, std::vector<double> values,
                             const std::vector<Tensor>& inputs, detail::Vjp vjp) {
    Tensor out = Tensor::from(std::move(shape), std::move(values));
    bool any_tracked = false;
    for (const auto& in : inputs) any_tracked |= in.tracked();
    if (any_tracked) {
        for (const auto& in : inputs) out.p_->parents.push_back(in.p_);
        out.p_->vjp = std::move(vjp);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Op kinds

inline void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
    }
}

inline Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape("add", a, b);
    std::vector<double> out(a.data().size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
    return make_op_output(a.shape(), std::move(out), {a, b},
                          [](const std::vector<double>& g) {
                              return std::vector<std::vector<double>>{g, g};
                          });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape("sub", a, b);
    std::vector<double> out(a.data().size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
    return make_op_output(a.shape(), std::move(out), {a, b},
                          [](const std::vector<double>& g) {
                              std::vector<double> gb(g.size());
                              for (size_t i = 0; i < g.size(); ++i) gb[i] = -g[i];
                              return std::vector<std::vector<double>>{g, std::move(gb)};
                          });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape("mul", a, b);
    std::vector<double> out(a.data().size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
    std::vector<double> av = a.data(), bv = b.data();
    return make_op_output(a.shape(), std::move(out), {a, b},
                          [av = std::move(av), bv = std::move(bv)](const std::vector<double>& g) {
                              std::vector<double> ga(g.size()), gb(g.size());
                              for (size_t i = 0; i < g.size(); ++i) {
                                  ga[i] = g[i] * bv[i];
                                  gb[i] = g[i] * av[i];
                              }
                              return std::vector<std::vector<double>>{std::move(ga), std::move(gb)};
                          });
}

inline Tensor scale(const Tensor& x, double c) {
    std::vector<double> out(x.data().size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * c;
    return make_op_output(x.shape(), std::move(out), {x},
                          [c](const std::vector<double>& g) {
                              std::vector<double> gx(g.size());
                              for (size_t i = 0; i < g.size(); ++i) gx[i] = g[i] * c;
                              return std::vector<std::vector<double>>{std::move(gx)};
                          });
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw ShapeError("matmul: needs rank-2 operands, got " + shape_str(a.shape()) +
                         " and " + shape_str(b.shape()));
    }
    const int64_t m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
    if (k != k2) {
        throw ShapeError("matmul: inner dims mismatch (" + shape_str(a.shape()) + " * " +
                         shape_str(b.shape()) + ")");
    }
    std::vector<double> out(static_cast<size_t>(m * n), 0.0);
    const auto& av = a.data();
    const auto& bv = b.data();
    for (int64_t i = 0; i < m; ++i) {
        for (int64_t p = 0; p < k; ++p) {
            const double aip = av[static_cast<size_t>(i * k + p)];
            if (aip == 0.0) continue;
            const size_t brow = static_cast<size_t>(p * n);
            const size_t orow = static_cast<size_t>(i * n);
            for (int64_t j = 0; j < n; ++j) out[orow + j] += aip * bv[brow + j];
        }
    }
    std::vector<double> ac = av, bc = bv;
    return make_op_output({m, n}, std::move(out), {a, b},
                          [m, k, n, ac = std::move(ac), bc = std::move(bc)](const std::vector<double>& g) {
                              // dA = G * B^T; dB = A^T * G
                              std::vector<double> ga(static_cast<size_t>(m * k), 0.0);
                              std::vector<double> gb(static_cast<size_t>(k * n), 0.0);
                              for (int64_t i = 0; i < m; ++i) {
                                  for (int64_t j = 0; j < n; ++j) {
                                      const double gij = g[static_cast<size_t>(i * n + j)];
                                      if (gij == 0.0) continue;
                                      for (int64_t p = 0; p < k; ++p) {
                                          ga[static_cast<size_t>(i * k + p)] += gij * bc[static_cast<size_t>(p * n + j)];
                                          gb[static_cast<size_t>(p * n + j)] += gij * ac[static_cast<size_t>(i * k + p)];
                                      }
                                  }
                              }
                              return std::vector<std::vector<double>>{std::move(ga), std::move(gb)};
                          });
}

// Broadcasts a [C] bias over the batch dimension of a [BxC] tensor. The only
// broadcast in the library; everything else wants explicit shapes.
inline Tensor bias_add(const Tensor& x, const Tensor& b) {
    if (x.rank() != 2 || b.rank() != 1 || x.dim(1) != b.dim(0)) {
        throw ShapeError("bias_add: want [BxC] + [C], got " + shape_str(x.shape()) +
                         " + " + shape_str(b.shape()));
    }
    const int64_t bsz = x.dim(0), c = x.dim(1);
    std::vector<double> out(x.data().size());
    for (int64_t i = 0; i < bsz; ++i)
        for (int64_t j = 0; j < c; ++j)
            out[static_cast<size_t>(i * c + j)] =
                x.data()[static_cast<size_t>(i * c + j)] + b.data()[static_cast<size_t>(j)];
    return make_op_output(x.shape(), std::move(out), {x, b},
                          [bsz, c](const std::vector<double>& g) {
                              std::vector<double> gb(static_cast<size_t>(c), 0.0);
                              for (int64_t i = 0; i < bsz; ++i)
                                  for (int64_t j = 0; j < c; ++j)
                                      gb[static_cast<size_t>(j)] += g[static_cast<size_t>(i * c + j)];
                              return std::vector<std::vector<double>>{g, std::move(gb)};
                          });
}

inline Tensor relu(const Tensor& x) {
    std::vector<double> out(x.data().size());
    std::vector<double> mask(x.data().size());
    for (size_t i = 0; i < out.size(); ++i) {
        const bool pos = x.data()[i] > 0.0;
        out[i] = pos ? x.data()[i] : 0.0;
        mask[i] = pos ? 1.0 : 0.0;
    }
    return make_op_output(x.shape(), std::move(out), {x},
                          [mask = std::move(mask)](const std::vector<double>& g) {
                              std::vector<double> gx(g.size());
                              for (size_t i = 0; i < g.size(); ++i) gx[i] = g[i] * mask[i];
                              return std::vector<std::vector<double>>{std::move(gx)};
                          });
}

// Row-wise softened probabilities over the class dimension of a [BxC] tensor.
// Max-subtracted so finite logits always give finite probabilities.
inline Tensor softmax_t(const Tensor& x, double temperature) {
    if (x.rank() != 2) {
        throw ShapeError("softmax_t: want [BxC], got " + shape_str(x.shape()));
    }
    if (!(temperature > 0.0)) {
        throw ValueError("softmax_t: temperature must be > 0, got " + std::to_string(temperature));
    }
    const int64_t bsz = x.dim(0), c = x.dim(1);
    std::vector<double> out(x.data().size());
    for (int64_t i = 0; i < bsz; ++i) {
        const size_t row = static_cast<size_t>(i * c);
        double mx = -1e300;
        for (int64_t j = 0; j < c; ++j) mx = std::max(mx, x.data()[row + j] / temperature);
        double s = 0.0;
        for (int64_t j = 0; j < c; ++j) {
            out[row + j] = std::exp(x.data()[row + j] / temperature - mx);
            s += out[row + j];
        }
        for (int64_t j = 0; j < c; ++j) out[row + j] /= s;
    }
    std::vector<double> y = out;
    return make_op_output(x.shape(), std::move(out), {x},
                          [bsz, c, temperature, y = std::move(y)](const std::vector<double>& g) {
                              std::vector<double> gx(g.size());
                              for (int64_t i = 0; i < bsz; ++i) {
                                  const size_t row = static_cast<size_t>(i * c);
                                  double dot = 0.0;
                                  for (int64_t j = 0; j < c; ++j) dot += g[row + j] * y[row + j];
                                  for (int64_t j = 0; j < c; ++j)
                                      gx[row + j] = y[row + j] * (g[row + j] - dot) / temperature;
                              }
                              return std::vector<std::vector<double>>{std::move(gx)};
                          });
}

inline Tensor log_softmax(const Tensor& x) {
    if (x.rank() != 2) {
        throw ShapeError("log_softmax: want [BxC], got " + shape_str(x.shape()));
    }
    const int64_t bsz = x.dim(0), c = x.dim(1);
    std::vector<double> out(x.data().size());
    for (int64_t i = 0; i < bsz; ++i) {
        const size_t row = static_cast<size_t>(i * c);
        double mx = -1e300;
        for (int64_t j = 0; j < c; ++j) mx = std::max(mx, x.data()[row + j]);
        double s = 0.0;
        for (int64_t j = 0; j < c; ++j) s += std::exp(x.data()[row + j] - mx);
        const double lse = mx + std::log(s);
        for (int64_t j = 0; j < c; ++j) out[row + j] = x.data()[row + j] - lse;
    }
    std::vector<double> ls = out;
    return make_op_output(x.shape(), std::move(out), {x},
                          [bsz, c, ls = std::move(ls)](const std::vector<double>& g) {
                              std::vector<double> gx(g.size());
                              for (int64_t i = 0; i < bsz; ++i) {
                                  const size_t row = static_cast<size_t>(i * c);
                                  double gs = 0.0;
                                  for (int64_t j = 0; j < c; ++j) gs += g[row + j];
                                  for (int64_t j = 0; j < c; ++j)
                                      gx[row + j] = g[row + j] - std::exp(ls[row + j]) * gs;
                              }
                              return std::vector<std::vector<double>>{std::move(gx)};
                          });
}

inline Tensor sum(const Tensor& x) {
    double s = 0.0;
    for (double v : x.data()) s += v;
    const size_t n = x.data().size();
    return make_op_output({}, {s}, {x},
                          [n](const std::vector<double>& g) {
                              return std::vector<std::vector<double>>{std::vector<double>(n, g[0])};
                          });
}

inline Tensor mean(const Tensor& x) {
    if (x.numel() == 0) throw ShapeError("mean: empty tensor");
    double s = 0.0;
    for (double v : x.data()) s += v;
    const size_t n = x.data().size();
    return make_op_output({}, {s / static_cast<double>(n)}, {x},
                          [n](const std::vector<double>& g) {
                              return std::vector<std::vector<double>>{
                                  std::vector<double>(n, g[0] / static_cast<double>(n))};
                          });
}

// sign(0) = 0; gradient is zero almost everywhere, so the backward rule is zero.
inline Tensor sign(const Tensor& x) {
    std::vector<double> out(x.data().size());
    for (size_t i = 0; i < out.size(); ++i) {
        const double v = x.data()[i];
        out[i] = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
    }
    const size_t n = x.data().size();
    return make_op_output(x.shape(), std::move(out), {x},
                          [n](const std::vector<double>&) {
                              return std::vector<std::vector<double>>{std::vector<double>(n, 0.0)};
                          });
}

inline Tensor clamp(const Tensor& x, double lo, double hi) {
    if (lo > hi) {
        throw ValueError("clamp: lo " + std::to_string(lo) + " > hi " + std::to_string(hi));
    }
    std::vector<double> out(x.data().size());
    std::vector<double> mask(x.data().size());
    for (size_t i = 0; i < out.size(); ++i) {
        const double v = x.data()[i];
        out[i] = std::min(std::max(v, lo), hi);
        mask[i] = (v >= lo && v <= hi) ? 1.0 : 0.0;
    }
    return make_op_output(x.shape(), std::move(out), {x},
                          [mask = std::move(mask)](const std::vector<double>& g) {
                              std::vector<double> gx(g.size());
                              for (size_t i = 0; i < g.size(); ++i) gx[i] = g[i] * mask[i];
                              return std::vector<std::vector<double>>{std::move(gx)};
                          });
}

inline void check_permutation(const std::vector<int64_t>& perm, int64_t n) {
    if (static_cast<int64_t>(perm.size()) != n) {
        throw ValueError("permutation: size " + std::to_string(perm.size()) +
                         " != batch " + std::to_string(n));
    }
    std::vector<char> seen(static_cast<size_t>(n), 0);
    for (int64_t p : perm) {
        if (p < 0 || p >= n || seen[static_cast<size_t>(p)]) {
            throw ValueError("permutation: not a permutation of 0.." + std::to_string(n - 1));
        }
        seen[static_cast<size_t>(p)] = 1;
    }
}

// out[i] = x[perm[i]] over the batch dimension of a [BxC] tensor.
inline Tensor permute_rows(const Tensor& x, const std::vector<int64_t>& perm) {
    if (x.rank() != 2) {
        throw ShapeError("permute_rows: want [BxC], got " + shape_str(x.shape()));
    }
    const int64_t bsz = x.dim(0), c = x.dim(1);
    check_permutation(perm, bsz);
    std::vector<double> out(x.data().size());
    for (int64_t i = 0; i < bsz; ++i) {
        const size_t src = static_cast<size_t>(perm[static_cast<size_t>(i)] * c);
        const size_t dst = static_cast<size_t>(i * c);
        for (int64_t j = 0; j < c; ++j) out[dst + j] = x.data()[src + j];
    }
    std::vector<int64_t> p = perm;
    return make_op_output(x.shape(), std::move(out), {x},
                          [bsz, c, p = std::move(p)](const std::vector<double>& g) {
                              std::vector<double> gx(g.size(), 0.0);
                              for (int64_t i = 0; i < bsz; ++i) {
                                  const size_t dst = static_cast<size_t>(p[static_cast<size_t>(i)] * c);
                                  const size_t src = static_cast<size_t>(i * c);
                                  for (int64_t j = 0; j < c; ++j) gx[dst + j] += g[src + j];
                              }
                              return std::vector<std::vector<double>>{std::move(gx)};
                          });
}

// ---------------------------------------------------------------------------
// Generic dispatch over op kind names.

struct OpArgs {
    double temperature = 1.0;
    double scalar = 1.0;
    double lo = 0.0;
    double hi = 1.0;
    std::vector<int64_t> perm;
};

inline Tensor forward_op(const std::string& kind, const std::vector<Tensor>& inputs,
                         const OpArgs& args = {}) {
    auto want = [&](size_t n) {
        if (inputs.size() != n) {
            throw ValueError("forward_op: '" + kind + "' wants " + std::to_string(n) +
                             " inputs, got " + std::to_string(inputs.size()));
        }
    };
    if (kind == "matmul") { want(2); return matmul(inputs[0], inputs[1]); }
    if (kind == "bias_add") { want(2); return bias_add(inputs[0], inputs[1]); }
    if (kind == "relu") { want(1); return relu(inputs[0]); }
    if (kind == "softmax_t") { want(1); return softmax_t(inputs[0], args.temperature); }
    if (kind == "log_softmax") { want(1); return log_softmax(inputs[0]); }
    if (kind == "add") { want(2); return add(inputs[0], inputs[1]); }
    if (kind == "sub") { want(2); return sub(inputs[0], inputs[1]); }
    if (kind == "mul") { want(2); return mul(inputs[0], inputs[1]); }
    if (kind == "scale") { want(1); return scale(inputs[0], args.scalar); }
    if (kind == "sum") { want(1); return sum(inputs[0]); }
    if (kind == "mean") { want(1); return mean(inputs[0]); }
    if (kind == "sign") { want(1); return sign(inputs[0]); }
    if (kind == "clamp") { want(1); return clamp(inputs[0], args.lo, args.hi); }
    if (kind == "permute_rows") { want(1); return permute_rows(inputs[0], args.perm); }
    throw ValueError("forward_op: unknown op kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Reverse pass

class GradMap {
public:
    // Gradient of the root w.r.t. a leaf; zero tensor when the leaf is off-path.
    Tensor get(const Tensor& t) const {
        auto it = grads_.find(t.id());
        if (it == grads_.end()) return Tensor::zeros(t.shape());
        return it->second;
    }

    bool contains(const Tensor& t) const { return grads_.count(t.id()) > 0; }
    size_t size() const { return grads_.size(); }

private:
    std::unordered_map<const detail::TensorData*, Tensor> grads_;
    friend GradMap backward(const Tensor& root);
};

// Gradients of a scalar root w.r.t. every requires_grad leaf reachable from it.
// Each node is visited exactly once, in reverse topological order.
inline GradMap backward(const Tensor& root) {
    if (root.numel() != 1) {
        throw ShapeError("backward: root must be scalar, got " + shape_str(root.shape()));
    }

    using detail::TensorData;
    std::vector<TensorData*> order;
    std::unordered_set<TensorData*> seen;
    std::vector<std::pair<TensorData*, size_t>> stack;

    TensorData* rootp = root.p_.get();
    if (rootp->tracked()) {
        stack.emplace_back(rootp, 0);
        seen.insert(rootp);
    }
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            TensorData* parent = node->parents[idx].get();
            ++idx;
            if (parent->tracked() && seen.insert(parent).second) {
                stack.emplace_back(parent, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    std::unordered_map<TensorData*, std::vector<double>> grad_buf;
    grad_buf[rootp] = {1.0};

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorData* node = *it;
        auto gi = grad_buf.find(node);
        if (gi == grad_buf.end() || !node->vjp) continue;
        auto parts = node->vjp(gi->second);
        for (size_t k = 0; k < node->parents.size(); ++k) {
            TensorData* parent = node->parents[k].get();
            if (!parent->tracked()) continue;
            auto& acc = grad_buf[parent];
            if (acc.empty()) {
                acc = std::move(parts[k]);
            } else {
                for (size_t i = 0; i < acc.size(); ++i) acc[i] += parts[k][i];
            }
        }
    }

    GradMap out;
    for (TensorData* node : order) {
        if (!node->requires_grad) continue;
        auto gi = grad_buf.find(node);
        if (gi == grad_buf.end()) continue;
        out.grads_[node] = Tensor::from(node->shape, std::move(gi->second));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Composed losses and the independent gradient oracle.

// Mean cross-entropy of logits [BxC] against integer labels.
inline Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2) {
        throw ShapeError("cross_entropy: want [BxC] logits, got " + shape_str(logits.shape()));
    }
    const int64_t bsz = logits.dim(0), c = logits.dim(1);
    if (static_cast<int64_t>(labels.size()) != bsz) {
        throw ShapeError("cross_entropy: batch " + std::to_string(bsz) + " vs " +
                         std::to_string(labels.size()) + " labels");
    }
    std::vector<double> onehot(static_cast<size_t>(bsz * c), 0.0);
    for (int64_t i = 0; i < bsz; ++i) {
        const int y = labels[static_cast<size_t>(i)];
        if (y < 0 || y >= c) {
            throw ValueError("cross_entropy: label " + std::to_string(y) + " outside [0," +
                             std::to_string(c) + ")");
        }
        onehot[static_cast<size_t>(i * c + y)] = 1.0;
    }
    Tensor mask = Tensor::from({bsz, c}, std::move(onehot));
    return scale(sum(mul(mask, log_softmax(logits))), -1.0 / static_cast<double>(bsz));
}

// Central finite differences, (f(x+h e_k) - f(x-h e_k)) / 2h per coordinate.
// Uses forward evaluation only; independent of the reverse pass it checks.
inline Tensor finite_diff_gradient(const std::function<double(const Tensor&)>& f,
                                   const Tensor& x, double h) {
    if (!(h > 0.0)) throw ValueError("finite_diff_gradient: h must be > 0");
    std::vector<double> grad(x.data().size());
    std::vector<double> bumped = x.data();
    for (size_t k = 0; k < bumped.size(); ++k) {
        const double orig = bumped[k];
        bumped[k] = orig + h;
        const double up = f(Tensor::from(x.shape(), bumped));
        bumped[k] = orig - h;
        const double dn = f(Tensor::from(x.shape(), bumped));
        bumped[k] = orig;
        grad[k] = (up - dn) / (2.0 * h);
    }
    return Tensor::from(x.shape(), std::move(grad));
}

}  // namespace pmafl
