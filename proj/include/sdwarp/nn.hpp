#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sdwarp/checkpoint.hpp"
#include "sdwarp/ops.hpp"
#include "sdwarp/rng.hpp"

namespace sdwarp {

template <typename T>
struct Param {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    Tensor<T> m, v;  // Adam state
};

// Ordered parameter registry. Order of creation is the serialization order,
// which keeps checkpoints and optimizer sweeps deterministic.
template <typename T>
class ParamStore {
public:
    Param<T>& add(const std::string& name, std::vector<int64_t> shape) {
        for (const auto& p : params_)
            if (p->name == name) throw ArgumentError("ParamStore: duplicate name " + name);
        auto p = std::make_unique<Param<T>>();
        p->name = name;
        p->value = Tensor<T>(shape);
        p->grad = Tensor<T>(shape);
        p->m = Tensor<T>(shape);
        p->v = Tensor<T>(std::move(shape));
        params_.push_back(std::move(p));
        return *params_.back();
    }

    std::vector<std::unique_ptr<Param<T>>>& params() { return params_; }
    const std::vector<std::unique_ptr<Param<T>>>& params() const { return params_; }

    Param<T>* find(const std::string& name) {
        for (auto& p : params_)
            if (p->name == name) return p.get();
        return nullptr;
    }

    int64_t count_scalars() const {
        int64_t n = 0;
        for (const auto& p : params_) n += p->value.numel();
        return n;
    }

    void zero_grads() {
        for (auto& p : params_) p->grad.zero();
    }

    // Adam with bias correction; step count t starts at 1.
    void adam_step(double lr, int64_t t, double beta1 = 0.5, double beta2 = 0.999,
                   double eps = 1e-8) {
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (auto& p : params_) {
            for (int64_t i = 0; i < p->value.numel(); ++i) {
                const double g = static_cast<double>(p->grad[i]);
                const double m = beta1 * static_cast<double>(p->m[i]) + (1.0 - beta1) * g;
                const double v = beta2 * static_cast<double>(p->v[i]) + (1.0 - beta2) * g * g;
                p->m[i] = static_cast<T>(m);
                p->v[i] = static_cast<T>(v);
                const double mh = m / bc1;
                const double vh = v / bc2;
                p->value[i] = static_cast<T>(static_cast<double>(p->value[i]) -
                                             lr * mh / (std::sqrt(vh) + eps));
            }
        }
    }

    void append_to_checkpoint(Checkpoint& ckpt, const std::string& prefix,
                              bool with_optimizer) const {
        for (const auto& p : params_) {
            ckpt.entries.emplace_back(prefix + p->name, p->value.template cast<float>());
            if (with_optimizer) {
                ckpt.entries.emplace_back(prefix + p->name + ".adam_m", p->m.template cast<float>());
                ckpt.entries.emplace_back(prefix + p->name + ".adam_v", p->v.template cast<float>());
            }
        }
    }

    void load_from_checkpoint(const Checkpoint& ckpt, const std::string& prefix,
                              bool with_optimizer) {
        for (auto& p : params_) {
            const Tensor<float>* t = ckpt.find(prefix + p->name);
            if (!t) throw FormatError("checkpoint: missing parameter " + prefix + p->name);
            if (t->shape() != p->value.shape())
                throw FormatError("checkpoint: shape mismatch for " + prefix + p->name + ": file " +
                                  Tensor<float>::shape_str(t->shape()) + " vs model " +
                                  Tensor<float>::shape_str(p->value.shape()));
            p->value = t->template cast<T>();
            if (with_optimizer) {
                const Tensor<float>* m = ckpt.find(prefix + p->name + ".adam_m");
                const Tensor<float>* v = ckpt.find(prefix + p->name + ".adam_v");
                if (!m || !v)
                    throw FormatError("checkpoint: missing optimizer state for " + p->name);
                p->m = m->template cast<T>();
                p->v = v->template cast<T>();
            }
        }
    }

private:
    std::vector<std::unique_ptr<Param<T>>> params_;
};

// Per-forward binding of parameters into the autograd graph. pull_grads()
// moves the accumulated graph gradients back into the store.
template <typename T>
class GraphBind {
public:
    Var<T> use(Param<T>& p) {
        auto v = make_var(p.value, true);
        bound_.emplace_back(&p, v);
        return v;
    }

    // Parameter used as a constant (frozen for this graph).
    Var<T> use_frozen(Param<T>& p) { return constant(p.value); }

    void pull_grads() {
        for (auto& [p, v] : bound_) {
            if (!v->has_grad()) continue;
            for (int64_t i = 0; i < p->grad.numel(); ++i) p->grad[i] += v->grad[i];
        }
    }

private:
    std::vector<std::pair<Param<T>*, Var<T>>> bound_;
};

enum class Init { He, Zero };

template <typename T>
void init_param(Param<T>& p, Init init, Rng& rng, int64_t fan_in) {
    switch (init) {
        case Init::He: rng.fill_normal(p.value, 0.0, std::sqrt(2.0 / static_cast<double>(fan_in))); break;
        case Init::Zero: p.value.zero(); break;
    }
}

template <typename T>
struct Conv2dLayer {
    Param<T>* w = nullptr;
    Param<T>* b = nullptr;
    int64_t stride = 1, pad = 1;

    static Conv2dLayer create(ParamStore<T>& ps, Rng& rng, const std::string& name, int64_t cin,
                              int64_t cout, int64_t k, int64_t stride, int64_t pad,
                              Init init = Init::He) {
        Conv2dLayer l;
        l.w = &ps.add(name + ".weight", {cout, cin, k, k});
        l.b = &ps.add(name + ".bias", {cout});
        init_param(*l.w, init, rng, cin * k * k);
        l.stride = stride;
        l.pad = pad;
        return l;
    }

    Var<T> operator()(GraphBind<T>& bind, const Var<T>& x, bool frozen = false) const {
        return conv2d(x, frozen ? bind.use_frozen(*w) : bind.use(*w),
                      frozen ? bind.use_frozen(*b) : bind.use(*b), stride, pad);
    }
};

template <typename T>
struct Conv3dLayer {
    Param<T>* w = nullptr;
    Param<T>* b = nullptr;

    static Conv3dLayer create(ParamStore<T>& ps, Rng& rng, const std::string& name, int64_t cin,
                              int64_t cout, Init init = Init::He) {
        Conv3dLayer l;
        l.w = &ps.add(name + ".weight", {cout, cin, 3, 3, 3});
        l.b = &ps.add(name + ".bias", {cout});
        init_param(*l.w, init, rng, cin * 27);
        return l;
    }

    Var<T> operator()(GraphBind<T>& bind, const Var<T>& x, bool frozen = false) const {
        return conv3d(x, frozen ? bind.use_frozen(*w) : bind.use(*w),
                      frozen ? bind.use_frozen(*b) : bind.use(*b));
    }
};

template <typename T>
struct InstanceNormLayer {
    Param<T>* gamma = nullptr;
    Param<T>* beta = nullptr;

    static InstanceNormLayer create(ParamStore<T>& ps, const std::string& name, int64_t c) {
        InstanceNormLayer l;
        l.gamma = &ps.add(name + ".gamma", {c});
        l.beta = &ps.add(name + ".beta", {c});
        l.gamma->value.fill(T(1));
        return l;
    }

    Var<T> operator()(GraphBind<T>& bind, const Var<T>& x, bool frozen = false) const {
        return instance_norm(x, frozen ? bind.use_frozen(*gamma) : bind.use(*gamma),
                             frozen ? bind.use_frozen(*beta) : bind.use(*beta));
    }
};

// conv + instance norm + leaky relu
template <typename T>
struct ConvBlock {
    Conv2dLayer<T> conv;
    InstanceNormLayer<T> norm;
    bool use_norm = true;

    static ConvBlock create(ParamStore<T>& ps, Rng& rng, const std::string& name, int64_t cin,
                            int64_t cout, int64_t stride, bool use_norm = true) {
        ConvBlock b;
        b.conv = Conv2dLayer<T>::create(ps, rng, name + ".conv", cin, cout, 3, stride, 1);
        b.use_norm = use_norm;
        if (use_norm) b.norm = InstanceNormLayer<T>::create(ps, name + ".norm", cout);
        return b;
    }

    Var<T> operator()(GraphBind<T>& bind, const Var<T>& x, bool frozen = false) const {
        auto y = conv(bind, x, frozen);
        if (use_norm) y = norm(bind, y, frozen);
        return leaky_relu(y, T(0.2));
    }
};

// Three stride-2 conv stages and a patch-logit head.
template <typename T>
class PatchDiscriminator {
public:
    PatchDiscriminator() = default;

    PatchDiscriminator(int64_t in_channels, const std::array<int, 3>& widths, uint64_t seed) {
        Rng rng(Rng::derive(seed, 0xD15C));
        s1_ = ConvBlock<T>::create(store_, rng, "d.s1", in_channels, widths[0], 2, false);
        s2_ = ConvBlock<T>::create(store_, rng, "d.s2", widths[0], widths[1], 2);
        s3_ = ConvBlock<T>::create(store_, rng, "d.s3", widths[1], widths[2], 2);
        head_ = Conv2dLayer<T>::create(store_, rng, "d.head", widths[2], 1, 3, 1, 1);
    }

    Var<T> forward(GraphBind<T>& bind, const Var<T>& x, bool frozen = false) const {
        auto h = s1_(bind, x, frozen);
        h = s2_(bind, h, frozen);
        h = s3_(bind, h, frozen);
        return head_(bind, h, frozen);
    }

    ParamStore<T>& store() { return store_; }
    const ParamStore<T>& store() const { return store_; }

private:
    ParamStore<T> store_;
    ConvBlock<T> s1_, s2_, s3_;
    Conv2dLayer<T> head_;
};

// [N,H,W] int labels -> [N,L,H,W] one-hot.
template <typename T>
Tensor<T> one_hot(const Tensor<int32_t>& labels, int64_t L) {
    if (labels.rank() != 3) throw ArgumentError("one_hot: expects [N,H,W]");
    const int64_t N = labels.dim(0), HW = labels.dim(1) * labels.dim(2);
    Tensor<T> out({N, L, labels.dim(1), labels.dim(2)});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t p = 0; p < HW; ++p) {
            const int32_t lab = labels[n * HW + p];
            if (lab < 0 || lab >= L) throw ArgumentError("one_hot: label outside range");
            out[(n * L + lab) * HW + p] = T(1);
        }
    return out;
}

}  // namespace sdwarp
