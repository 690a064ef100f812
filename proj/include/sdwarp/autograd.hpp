#pragma once

#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "sdwarp/common.hpp"
#include "sdwarp/tensor.hpp"

namespace sdwarp {

// Define-by-run reverse-mode autograd over dense tensors. Each forward call
// builds a fresh graph; backward() walks it in reverse topological order.
// Gradients accumulate, so a graph can be backpropagated from several roots
// (zero_grads between passes when separate gradients are wanted).
template <typename T>
struct Node {
    Tensor<T> value;
    Tensor<T> grad;  // allocated on demand, same shape as value
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> inputs;
    std::function<void(Node&)> backward_fn;
    const char* op = "leaf";

    bool has_grad() const { return grad.numel() == value.numel() && value.numel() > 0; }
    Tensor<T>& ensure_grad() {
        if (!has_grad()) grad = Tensor<T>(value.shape());
        return grad;
    }
};

template <typename T>
using Var = std::shared_ptr<Node<T>>;

template <typename T>
Var<T> make_var(Tensor<T> value, bool requires_grad = false) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return n;
}

template <typename T>
Var<T> constant(Tensor<T> value) {
    return make_var<T>(std::move(value), false);
}

template <typename T>
bool any_requires_grad(const std::vector<Var<T>>& vs) {
    for (const auto& v : vs)
        if (v->requires_grad) return true;
    return false;
}

template <typename T>
Var<T> make_op(const char* name, Tensor<T> value, std::vector<Var<T>> inputs,
               std::function<void(Node<T>&)> backward_fn) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    n->inputs = std::move(inputs);
    n->requires_grad = any_requires_grad(n->inputs);
    n->op = name;
    if (n->requires_grad) n->backward_fn = std::move(backward_fn);
    return n;
}

template <typename T>
std::vector<Node<T>*> topo_order(Node<T>* root) {
    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> visited;
    // Iterative post-order DFS; graphs can be a few thousand nodes deep.
    std::vector<std::pair<Node<T>*, size_t>> stack;
    stack.push_back({root, 0});
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->inputs.size()) {
            Node<T>* next = node->inputs[idx].get();
            ++idx;
            if (next->requires_grad && !visited.count(next)) {
                visited.insert(next);
                stack.push_back({next, 0});
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    return order;  // children before parents
}

// Backpropagate from a scalar root (shape [1] or a single-element tensor).
template <typename T>
void backward(const Var<T>& root) {
    if (root->value.numel() != 1) throw ArgumentError("backward: root must be scalar");
    if (!root->requires_grad) return;
    auto order = topo_order(root.get());
    root->ensure_grad();
    root->grad[0] += T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node<T>* n = *it;
        if (n->backward_fn && n->has_grad()) n->backward_fn(*n);
    }
}

template <typename T>
void zero_grads(const Var<T>& root) {
    auto order = topo_order(root.get());
    for (Node<T>* n : order)
        if (n->has_grad()) n->grad.zero();
}

// ---------------------------------------------------------------------------
// Elementwise and reduction primitives.
// ---------------------------------------------------------------------------

template <typename T>
void check_same_shape(const Var<T>& a, const Var<T>& b, const char* op) {
    if (!a->value.same_shape(b->value))
        throw ArgumentError(std::string(op) + ": shape mismatch " +
                            Tensor<T>::shape_str(a->value.shape()) + " vs " +
                            Tensor<T>::shape_str(b->value.shape()));
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
    check_same_shape(a, b, "add");
    Tensor<T> out(a->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] + b->value[i];
    return make_op<T>("add", std::move(out), {a, b}, [](Node<T>& n) {
        for (int k = 0; k < 2; ++k) {
            auto& in = n.inputs[static_cast<size_t>(k)];
            if (!in->requires_grad) continue;
            auto& g = in->ensure_grad();
            for (int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
        }
    });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
    check_same_shape(a, b, "sub");
    Tensor<T> out(a->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] - b->value[i];
    return make_op<T>("sub", std::move(out), {a, b}, [](Node<T>& n) {
        if (n.inputs[0]->requires_grad) {
            auto& g = n.inputs[0]->ensure_grad();
            for (int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
        }
        if (n.inputs[1]->requires_grad) {
            auto& g = n.inputs[1]->ensure_grad();
            for (int64_t i = 0; i < g.numel(); ++i) g[i] -= n.grad[i];
        }
    });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
    check_same_shape(a, b, "mul");
    Tensor<T> out(a->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] * b->value[i];
    return make_op<T>("mul", std::move(out), {a, b}, [](Node<T>& n) {
        if (n.inputs[0]->requires_grad) {
            auto& g = n.inputs[0]->ensure_grad();
            for (int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * n.inputs[1]->value[i];
        }
        if (n.inputs[1]->requires_grad) {
            auto& g = n.inputs[1]->ensure_grad();
            for (int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * n.inputs[0]->value[i];
        }
    });
}

template <typename T>
Var<T> scale(const Var<T>& a, T s) {
    Tensor<T> out(a->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] * s;
    return make_op<T>("scale", std::move(out), {a}, [s](Node<T>& n) {
        auto& g = n.inputs[0]->ensure_grad();
        for (int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * s;
    });
}

template <typename T>
Var<T> add_scalar(const Var<T>& a, T s) {
    Tensor<T> out(a->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] + s;
    return make_op<T>("add_scalar", std::move(out), {a}, [](Node<T>& n) {
        auto& g = n.inputs[0]->ensure_grad();
        for (int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
    });
}

// Elementwise multiply by a constant tensor (no gradient to the constant).
template <typename T>
Var<T> mul_const(const Var<T>& a, Tensor<T> c) {
    if (!a->value.same_shape(c)) throw ArgumentError("mul_const: shape mismatch");
    Tensor<T> out(a->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] * c[i];
    auto cc = std::make_shared<Tensor<T>>(std::move(c));
    return make_op<T>("mul_const", std::move(out), {a}, [cc](Node<T>& n) {
        auto& g = n.inputs[0]->ensure_grad();
        for (int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * (*cc)[i];
    });
}

template <typename T>
Var<T> square(const Var<T>& a) {
    Tensor<T> out(a->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] * a->value[i];
    return make_op<T>("square", std::move(out), {a}, [](Node<T>& n) {
        auto& g = n.inputs[0]->ensure_grad();
        for (int64_t i = 0; i < g.numel(); ++i) g[i] += T(2) * n.grad[i] * n.inputs[0]->value[i];
    });
}

template <typename T>
Var<T> sum(const Var<T>& a) {
    double acc = 0;
    for (int64_t i = 0; i < a->value.numel(); ++i) acc += static_cast<double>(a->value[i]);
    Tensor<T> out({1});
    out[0] = static_cast<T>(acc);
    return make_op<T>("sum", std::move(out), {a}, [](Node<T>& n) {
        auto& g = n.inputs[0]->ensure_grad();
        const T go = n.grad[0];
        for (int64_t i = 0; i < g.numel(); ++i) g[i] += go;
    });
}

template <typename T>
Var<T> mean(const Var<T>& a) {
    const int64_t n_el = a->value.numel();
    if (n_el == 0) throw ArgumentError("mean: empty tensor");
    double acc = 0;
    for (int64_t i = 0; i < n_el; ++i) acc += static_cast<double>(a->value[i]);
    Tensor<T> out({1});
    out[0] = static_cast<T>(acc / static_cast<double>(n_el));
    return make_op<T>("mean", std::move(out), {a}, [n_el](Node<T>& n) {
        auto& g = n.inputs[0]->ensure_grad();
        const T go = n.grad[0] / static_cast<T>(n_el);
        for (int64_t i = 0; i < g.numel(); ++i) g[i] += go;
    });
}

template <typename T>
Var<T> add_scaled(const Var<T>& a, const Var<T>& b, T sb) {  // a + sb*b
    check_same_shape(a, b, "add_scaled");
    Tensor<T> out(a->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] + sb * b->value[i];
    return make_op<T>("add_scaled", std::move(out), {a, b}, [sb](Node<T>& n) {
        if (n.inputs[0]->requires_grad) {
            auto& g = n.inputs[0]->ensure_grad();
            for (int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
        }
        if (n.inputs[1]->requires_grad) {
            auto& g = n.inputs[1]->ensure_grad();
            for (int64_t i = 0; i < g.numel(); ++i) g[i] += sb * n.grad[i];
        }
    });
}

// Channel concatenation for [N,C,H,W] (and [N,C,D,H,W] when dims beyond the
// channel axis agree).
template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& parts) {
    if (parts.empty()) throw ArgumentError("concat_channels: no inputs");
    const auto& s0 = parts[0]->value.shape();
    int64_t ctotal = 0;
    int64_t inner = 1;
    for (size_t d = 2; d < s0.size(); ++d) inner *= s0[d];
    const int64_t N = s0[0];
    for (const auto& p : parts) {
        const auto& s = p->value.shape();
        if (s.size() != s0.size() || s[0] != N)
            throw ArgumentError("concat_channels: rank/batch mismatch");
        int64_t pin = 1;
        for (size_t d = 2; d < s.size(); ++d) {
            if (s[d] != s0[d]) throw ArgumentError("concat_channels: trailing dim mismatch");
            pin *= s[d];
        }
        (void)pin;
        ctotal += s[1];
    }
    std::vector<int64_t> oshape = s0;
    oshape[1] = ctotal;
    Tensor<T> out(oshape);
    int64_t coff = 0;
    for (const auto& p : parts) {
        const int64_t pc = p->value.dim(1);
        for (int64_t n = 0; n < N; ++n)
            std::memcpy(out.data() + (n * ctotal + coff) * inner,
                        p->value.data() + n * pc * inner,
                        sizeof(T) * static_cast<size_t>(pc * inner));
        coff += pc;
    }
    return make_op<T>("concat", std::move(out), parts, [ctotal, inner, N](Node<T>& n) {
        int64_t off = 0;
        for (auto& in : n.inputs) {
            const int64_t pc = in->value.dim(1);
            if (in->requires_grad) {
                auto& g = in->ensure_grad();
                for (int64_t b = 0; b < N; ++b) {
                    const T* src = n.grad.data() + (b * ctotal + off) * inner;
                    T* dst = g.data() + b * pc * inner;
                    for (int64_t i = 0; i < pc * inner; ++i) dst[i] += src[i];
                }
            }
            off += pc;
        }
    });
}

template <typename T>
Var<T> slice_channels(const Var<T>& a, int64_t c0, int64_t c1) {
    const auto& s = a->value.shape();
    if (s.size() < 2 || c0 < 0 || c1 > s[1] || c0 >= c1)
        throw ArgumentError("slice_channels: bad range");
    int64_t inner = 1;
    for (size_t d = 2; d < s.size(); ++d) inner *= s[d];
    const int64_t N = s[0], C = s[1], OC = c1 - c0;
    std::vector<int64_t> oshape = s;
    oshape[1] = OC;
    Tensor<T> out(oshape);
    for (int64_t n = 0; n < N; ++n)
        std::memcpy(out.data() + n * OC * inner, a->value.data() + (n * C + c0) * inner,
                    sizeof(T) * static_cast<size_t>(OC * inner));
    return make_op<T>("slice", std::move(out), {a}, [c0, OC, inner, N, C](Node<T>& n) {
        auto& g = n.inputs[0]->ensure_grad();
        for (int64_t b = 0; b < N; ++b) {
            const T* src = n.grad.data() + b * OC * inner;
            T* dst = g.data() + (b * C + c0) * inner;
            for (int64_t i = 0; i < OC * inner; ++i) dst[i] += src[i];
        }
    });
}

}  // namespace sdwarp
