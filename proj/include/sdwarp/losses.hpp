#pragma once

#include <optional>
#include <sstream>
#include <string>

#include "sdwarp/ops.hpp"
#include "sdwarp/rng.hpp"

namespace sdwarp {

struct LossWeights {
    double lambda_ce = 10.0;
    double lambda_l1 = 10.0;
    double lambda_tv = 2.0;
    double z0 = -1.0;
    double z1 = 1.0;

    void validate() const {
        if (!(std::isfinite(lambda_ce) && std::isfinite(lambda_l1) && std::isfinite(lambda_tv) &&
              std::isfinite(z0) && std::isfinite(z1)))
            throw ArgumentError("LossWeights: non-finite value");
        if (!(z0 < z1)) throw ArgumentError("LossWeights: requires z0 < z1");
    }
};

// ---------------------------------------------------------------------------
// Total variation over flow offsets: sum over right/down neighbor pairs of
// the L1 distance between coordinate vectors, divided by pixel count (and
// batch). Translation-invariant by construction.
// ---------------------------------------------------------------------------

template <typename T>
Var<T> tv_loss_op(const Var<T>& flow) {
    const auto& s = flow->value.shape();
    if (s.size() != 4 || s[1] != 2) throw ArgumentError("tv_loss_op: expects [N,2,h,w]");
    const int64_t N = s[0], H = s[2], W = s[3];
    const int64_t hw = H * W;
    const double norm = 1.0 / static_cast<double>(N * hw);
    double acc = 0;
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < 2; ++c) {
            const T* f = flow->value.data() + (n * 2 + c) * hw;
            for (int64_t y = 0; y < H; ++y)
                for (int64_t x = 0; x < W; ++x) {
                    if (x + 1 < W)
                        acc += std::abs(static_cast<double>(f[y * W + x + 1]) -
                                        static_cast<double>(f[y * W + x]));
                    if (y + 1 < H)
                        acc += std::abs(static_cast<double>(f[(y + 1) * W + x]) -
                                        static_cast<double>(f[y * W + x]));
                }
        }
    Tensor<T> out({1});
    out[0] = static_cast<T>(acc * norm);
    auto bw = [N, H, W, hw, norm](Node<T>& node) {
        auto& g = node.inputs[0]->ensure_grad();
        const double go = static_cast<double>(node.grad[0]) * norm;
        const T* fv = node.inputs[0]->value.data();
        for (int64_t n = 0; n < N; ++n)
            for (int64_t c = 0; c < 2; ++c) {
                const T* f = fv + (n * 2 + c) * hw;
                T* gf = g.data() + (n * 2 + c) * hw;
                for (int64_t y = 0; y < H; ++y)
                    for (int64_t x = 0; x < W; ++x) {
                        if (x + 1 < W) {
                            const double d = static_cast<double>(f[y * W + x + 1]) -
                                             static_cast<double>(f[y * W + x]);
                            const double sg = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
                            gf[y * W + x + 1] += static_cast<T>(go * sg);
                            gf[y * W + x] -= static_cast<T>(go * sg);
                        }
                        if (y + 1 < H) {
                            const double d = static_cast<double>(f[(y + 1) * W + x]) -
                                             static_cast<double>(f[y * W + x]);
                            const double sg = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
                            gf[(y + 1) * W + x] += static_cast<T>(go * sg);
                            gf[y * W + x] -= static_cast<T>(go * sg);
                        }
                    }
            }
    };
    return make_op<T>("tv_loss", std::move(out), {flow}, bw);
}

template <typename T>
double tv_loss(const FlowField2D<T>& flow) {
    flow.validate();
    Tensor<T> batched({1, 2, flow.height(), flow.width()});
    std::memcpy(batched.data(), flow.offsets.data(),
                sizeof(T) * static_cast<size_t>(flow.offsets.numel()));
    return static_cast<double>(tv_loss_op(constant(std::move(batched)))->value[0]);
}

// ---------------------------------------------------------------------------
// Masked L1: mean over all elements of |pred - target| * (1 - M). M is
// binary with a single channel, broadcast across pred channels.
// ---------------------------------------------------------------------------

template <typename T>
void check_binary_mask(const Tensor<T>& m, const char* who) {
    for (int64_t i = 0; i < m.numel(); ++i)
        if (!(m[i] == T(0) || m[i] == T(1)))
            throw ArgumentError(std::string(who) + ": mask must be exactly binary");
}

template <typename T>
Var<T> masked_l1_op(const Var<T>& pred, const Tensor<T>& target, const Tensor<T>& exclusion) {
    const auto& s = pred->value.shape();
    if (s.size() != 4) throw ArgumentError("masked_l1_op: expects [N,C,H,W]");
    if (!pred->value.same_shape(target)) throw ArgumentError("masked_l1_op: target shape mismatch");
    const int64_t N = s[0], C = s[1], HW = s[2] * s[3];
    if (exclusion.rank() != 4 || exclusion.dim(0) != N || exclusion.dim(1) != 1 ||
        exclusion.dim(2) != s[2] || exclusion.dim(3) != s[3])
        throw ArgumentError("masked_l1_op: exclusion mask must be [N,1,H,W]");
    check_binary_mask(exclusion, "masked_l1_op");
    const double norm = 1.0 / static_cast<double>(pred->value.numel());
    double acc = 0;
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c) {
            const T* p = pred->value.data() + (n * C + c) * HW;
            const T* t = target.data() + (n * C + c) * HW;
            const T* m = exclusion.data() + n * HW;
            for (int64_t i = 0; i < HW; ++i)
                acc += std::abs(static_cast<double>(p[i]) - static_cast<double>(t[i])) *
                       (1.0 - static_cast<double>(m[i]));
        }
    Tensor<T> out({1});
    out[0] = static_cast<T>(acc * norm);
    auto tgt = std::make_shared<Tensor<T>>(target);
    auto excl = std::make_shared<Tensor<T>>(exclusion);
    auto bw = [N, C, HW, norm, tgt, excl](Node<T>& node) {
        auto& g = node.inputs[0]->ensure_grad();
        const double go = static_cast<double>(node.grad[0]) * norm;
        for (int64_t n = 0; n < N; ++n)
            for (int64_t c = 0; c < C; ++c) {
                const T* p = node.inputs[0]->value.data() + (n * C + c) * HW;
                const T* t = tgt->data() + (n * C + c) * HW;
                const T* m = excl->data() + n * HW;
                T* gp = g.data() + (n * C + c) * HW;
                for (int64_t i = 0; i < HW; ++i) {
                    const double d = static_cast<double>(p[i]) - static_cast<double>(t[i]);
                    const double sg = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
                    gp[i] += static_cast<T>(go * sg * (1.0 - static_cast<double>(m[i])));
                }
            }
    };
    return make_op<T>("masked_l1", std::move(out), {pred}, bw);
}

template <typename T>
double masked_l1_loss(const Tensor<T>& pred, const Tensor<T>& target, const Tensor<T>& exclusion) {
    if (pred.rank() != 3) throw ArgumentError("masked_l1_loss: expects [c,h,w] tensors");
    auto lift = [](const Tensor<T>& t) {
        Tensor<T> b({1, t.dim(0), t.dim(1), t.dim(2)});
        std::memcpy(b.data(), t.data(), sizeof(T) * static_cast<size_t>(t.numel()));
        return b;
    };
    return static_cast<double>(
        masked_l1_op(constant(lift(pred)), lift(target), lift(exclusion))->value[0]);
}

// ---------------------------------------------------------------------------
// Pixelwise cross entropy against integer labels.
// ---------------------------------------------------------------------------

template <typename T>
Var<T> ce_loss_op(const Var<T>& logits, const Tensor<int32_t>& labels) {
    const auto& s = logits->value.shape();
    if (s.size() != 4) throw ArgumentError("ce_loss_op: expects [N,L,H,W]");
    const int64_t N = s[0], L = s[1], HW = s[2] * s[3];
    if (labels.rank() != 3 || labels.dim(0) != N || labels.dim(1) != s[2] || labels.dim(2) != s[3])
        throw ArgumentError("ce_loss_op: labels must be [N,H,W]");
    for (int64_t i = 0; i < labels.numel(); ++i)
        if (labels[i] < 0 || labels[i] >= L)
            throw ArgumentError("ce_loss_op: label outside label set");
    const double norm = 1.0 / static_cast<double>(N * HW);
    auto probs = std::make_shared<Tensor<T>>(s);
    double acc = 0;
    for (int64_t n = 0; n < N; ++n)
        for (int64_t p = 0; p < HW; ++p) {
            const T* in = logits->value.data() + n * L * HW;
            T* pr = probs->data() + n * L * HW;
            double mx = -1e300;
            for (int64_t c = 0; c < L; ++c) mx = std::max(mx, static_cast<double>(in[c * HW + p]));
            double z = 0;
            for (int64_t c = 0; c < L; ++c) z += std::exp(static_cast<double>(in[c * HW + p]) - mx);
            const int32_t lab = labels[n * HW + p];
            acc -= static_cast<double>(in[lab * HW + p]) - mx - std::log(z);
            for (int64_t c = 0; c < L; ++c)
                pr[c * HW + p] =
                    static_cast<T>(std::exp(static_cast<double>(in[c * HW + p]) - mx) / z);
        }
    Tensor<T> out({1});
    out[0] = static_cast<T>(acc * norm);
    auto labs = std::make_shared<Tensor<int32_t>>(labels);
    auto bw = [N, L, HW, norm, probs, labs](Node<T>& node) {
        auto& g = node.inputs[0]->ensure_grad();
        const double go = static_cast<double>(node.grad[0]) * norm;
        for (int64_t n = 0; n < N; ++n)
            for (int64_t p = 0; p < HW; ++p) {
                const T* pr = probs->data() + n * L * HW;
                T* gl = g.data() + n * L * HW;
                const int32_t lab = (*labs)[n * HW + p];
                for (int64_t c = 0; c < L; ++c) {
                    const double soft = static_cast<double>(pr[c * HW + p]);
                    gl[c * HW + p] += static_cast<T>(go * (soft - (c == lab ? 1.0 : 0.0)));
                }
            }
    };
    return make_op<T>("ce_loss", std::move(out), {logits}, bw);
}

template <typename T>
double ce_loss(const Tensor<T>& logits, const Tensor<int32_t>& labels) {
    if (logits.rank() != 3) throw ArgumentError("ce_loss: expects [L,h,w]");
    Tensor<T> lb({1, logits.dim(0), logits.dim(1), logits.dim(2)});
    std::memcpy(lb.data(), logits.data(), sizeof(T) * static_cast<size_t>(logits.numel()));
    Tensor<int32_t> ll({1, labels.dim(0), labels.dim(1)});
    std::memcpy(ll.data(), labels.data(), sizeof(int32_t) * static_cast<size_t>(labels.numel()));
    return static_cast<double>(ce_loss_op(constant(std::move(lb)), ll)->value[0]);
}

// ---------------------------------------------------------------------------
// z-distance loss over the depth-0 slots of a 3D flow: pulls the predicted z
// to z0 inside the clothing region and to z1 outside it.
// ---------------------------------------------------------------------------

template <typename T>
Var<T> zdist_loss_op(const Var<T>& coords, const Tensor<T>& clothes_mask,
                     const LossWeights& w = LossWeights{}) {
    w.validate();
    const auto& s = coords->value.shape();
    if (s.size() != 5 || s[1] != 3 || s[2] != 2)
        throw ArgumentError("zdist_loss_op: expects [N,3,2,h,w]");
    const int64_t N = s[0], H = s[3], W = s[4], hw = H * W;
    if (clothes_mask.rank() != 4 || clothes_mask.dim(0) != N || clothes_mask.dim(1) != 1 ||
        clothes_mask.dim(2) != H || clothes_mask.dim(3) != W)
        throw ArgumentError("zdist_loss_op: mask must be [N,1,h,w]");
    const double norm = 1.0 / static_cast<double>(N * hw);
    double acc = 0;
    for (int64_t n = 0; n < N; ++n) {
        const T* z = coords->value.data() + (n * 3 + 2) * 2 * hw;  // depth-0 slice of z channel
        const T* m = clothes_mask.data() + n * hw;
        for (int64_t i = 0; i < hw; ++i) {
            const double zd = static_cast<double>(z[i]);
            const double s1 = static_cast<double>(m[i]);
            acc += std::abs(w.z0 - zd) * s1 + std::abs(w.z1 - zd) * (1.0 - s1);
        }
    }
    Tensor<T> out({1});
    out[0] = static_cast<T>(acc * norm);
    auto mask = std::make_shared<Tensor<T>>(clothes_mask);
    const double z0 = w.z0, z1 = w.z1;
    auto bw = [N, hw, norm, mask, z0, z1](Node<T>& node) {
        auto& g = node.inputs[0]->ensure_grad();
        const double go = static_cast<double>(node.grad[0]) * norm;
        for (int64_t n = 0; n < N; ++n) {
            const T* z = node.inputs[0]->value.data() + (n * 3 + 2) * 2 * hw;
            const T* m = mask->data() + n * hw;
            T* gz = g.data() + (n * 3 + 2) * 2 * hw;
            for (int64_t i = 0; i < hw; ++i) {
                const double zd = static_cast<double>(z[i]);
                const double s1 = static_cast<double>(m[i]);
                const double d0 = zd - z0, d1 = zd - z1;
                const double sg0 = d0 > 0 ? 1.0 : (d0 < 0 ? -1.0 : 0.0);
                const double sg1 = d1 > 0 ? 1.0 : (d1 < 0 ? -1.0 : 0.0);
                gz[i] += static_cast<T>(go * (sg0 * s1 + sg1 * (1.0 - s1)));
            }
        }
    };
    return make_op<T>("zdist_loss", std::move(out), {coords}, bw);
}

template <typename T>
double zdist_loss(const FlowField3D<T>& flow, const Tensor<T>& clothes_mask,
                  const LossWeights& w = LossWeights{}) {
    flow.validate();
    Tensor<T> c({1, 3, 2, flow.height(), flow.width()});
    std::memcpy(c.data(), flow.coords.data(), sizeof(T) * static_cast<size_t>(flow.coords.numel()));
    Tensor<T> m({1, 1, clothes_mask.dim(1), clothes_mask.dim(2)});
    std::memcpy(m.data(), clothes_mask.data(),
                sizeof(T) * static_cast<size_t>(clothes_mask.numel()));
    return static_cast<double>(zdist_loss_op(constant(std::move(c)), m, w)->value[0]);
}

// ---------------------------------------------------------------------------
// LSGAN objectives.
// ---------------------------------------------------------------------------

template <typename T>
Var<T> lsgan_d_loss(const Var<T>& d_real, const Var<T>& d_fake) {
    auto rterm = mean(square(add_scalar(d_real, T(-1))));
    auto fterm = mean(square(d_fake));
    return add_scaled(scale(rterm, T(0.5)), fterm, T(0.5));
}

template <typename T>
Var<T> lsgan_g_loss(const Var<T>& d_fake) {
    return scale(mean(square(add_scalar(d_fake, T(-1)))), T(0.5));
}

// ---------------------------------------------------------------------------
// Frozen multi-scale perceptual feature stack. Weights are seeded once and
// never trained; an empty stage list makes the extractor the identity, which
// reduces the loss to pixelwise masked L1 (used by tests).
// ---------------------------------------------------------------------------

template <typename T>
class PerceptualExtractor {
public:
    struct Stage {
        Tensor<T> weight;  // [Cout,Cin,3,3]
        Tensor<T> bias;    // [Cout]
    };

    static PerceptualExtractor identity() { return PerceptualExtractor{}; }

    static PerceptualExtractor frozen_default(int64_t in_channels = 3,
                                              uint64_t seed = 0x5EEDCAFEULL) {
        PerceptualExtractor e;
        Rng rng(seed);
        int64_t cin = in_channels;
        for (int64_t cout : {8, 12, 16, 16}) {
            Stage st;
            st.weight = Tensor<T>({cout, cin, 3, 3});
            const double std = std::sqrt(2.0 / static_cast<double>(cin * 9));
            rng.fill_normal(st.weight, 0.0, std);
            st.bias = Tensor<T>({cout});
            e.stages_.push_back(std::move(st));
            cin = cout;
        }
        return e;
    }

    bool is_identity() const { return stages_.empty(); }
    size_t num_stages() const { return stages_.size(); }

    // Masked feature distance: sum over stages of mean(|phi(a)-phi(b)| * m_s),
    // with the keep mask area-pooled to each stage and binarized at 0.5.
    Var<T> loss(const Var<T>& a, const Tensor<T>& b, const Tensor<T>& keep_mask) const {
        if (!a->value.same_shape(b)) throw ArgumentError("perceptual: shape mismatch");
        const auto& s = a->value.shape();
        if (s.size() != 4) throw ArgumentError("perceptual: expects [N,C,H,W]");
        check_binary_mask(keep_mask, "perceptual keep mask");

        Var<T> fa = a;
        Var<T> fb = constant(b);
        Tensor<T> mask = keep_mask;  // [N,1,H,W]
        Var<T> total = constant(Tensor<T>::full({1}, T(0)));

        auto add_term = [&](const Var<T>& xa, const Var<T>& xb, const Tensor<T>& m) {
            // exclusion = 1 - keep
            Tensor<T> excl(m.shape());
            for (int64_t i = 0; i < m.numel(); ++i) excl[i] = T(1) - m[i];
            total = add(total, masked_l1_op(sub(xa, xb), Tensor<T>(xa->value.shape()), excl));
        };

        if (is_identity()) {
            add_term(fa, fb, mask);
            return total;
        }
        for (const auto& st : stages_) {
            if (fa->value.dim(2) % 2 != 0 || fa->value.dim(3) % 2 != 0) break;
            fa = leaky_relu(conv2d(fa, constant(st.weight), constant(st.bias), 2, 1));
            fb = leaky_relu(conv2d(fb, constant(st.weight), constant(st.bias), 2, 1));
            mask = pool_binarize(mask);
            add_term(fa, fb, mask);
        }
        return total;
    }

private:
    static Tensor<T> pool_binarize(const Tensor<T>& m) {
        const int64_t N = m.dim(0), H = m.dim(2), W = m.dim(3);
        Tensor<T> out({N, 1, H / 2, W / 2});
        for (int64_t n = 0; n < N; ++n)
            for (int64_t y = 0; y < H / 2; ++y)
                for (int64_t x = 0; x < W / 2; ++x) {
                    const double v =
                        0.25 * (static_cast<double>(m[(n * H + 2 * y) * W + 2 * x]) +
                                static_cast<double>(m[(n * H + 2 * y) * W + 2 * x + 1]) +
                                static_cast<double>(m[(n * H + 2 * y + 1) * W + 2 * x]) +
                                static_cast<double>(m[(n * H + 2 * y + 1) * W + 2 * x + 1]));
                    out[(n * (H / 2) + y) * (W / 2) + x] = v >= 0.5 ? T(1) : T(0);
                }
        return out;
    }

    std::vector<Stage> stages_;
};

template <typename T>
Var<T> masked_perceptual_loss_op(const PerceptualExtractor<T>& extractor, const Var<T>& a,
                                 const Tensor<T>& b, const Tensor<T>& keep_mask) {
    return extractor.loss(a, b, keep_mask);
}

// ---------------------------------------------------------------------------
// Loss report and Eq.-13 style recomposition.
// ---------------------------------------------------------------------------

struct LossReport {
    double tv = 0, ce = 0, l1 = 0, l1_masked = 0, vgg = 0, vgg_masked = 0;
    double cgan_g = 0, cgan_d = 0, zdist = 0, total = 0;
    bool zdist_active = false;

    double recompose(const LossWeights& w) const {
        return w.lambda_ce * ce + w.lambda_l1 * (l1 + l1_masked) + (vgg + vgg_masked) + cgan_g +
               w.lambda_tv * tv + (zdist_active ? zdist : 0.0);
    }

    std::string json_line(int64_t step) const {
        std::ostringstream os;
        os.precision(9);
        os << "{\"step\":" << step << ",\"tv\":" << tv << ",\"ce\":" << ce << ",\"l1\":" << l1
           << ",\"l1_masked\":" << l1_masked << ",\"vgg\":" << vgg
           << ",\"vgg_masked\":" << vgg_masked << ",\"cgan_g\":" << cgan_g
           << ",\"cgan_d\":" << cgan_d << ",\"zdist\":" << zdist << ",\"total\":" << total << "}";
        return os.str();
    }
};

// Weighted total per the condition-generator objective. zdist must be present
// exactly when the topology enables non-ROI removal.
template <typename T>
Var<T> total_condition_loss(const Var<T>& ce, const Var<T>& l1, const Var<T>& l1_masked,
                            const Var<T>& vgg, const Var<T>& vgg_masked, const Var<T>& cgan_g,
                            const Var<T>& tv, std::type_identity_t<const Var<T>*> zdist,
                            bool nonroi_removal, const LossWeights& w) {
    w.validate();
    if (nonroi_removal && zdist == nullptr)
        throw ConfigError("total_condition_loss: z-dist term required when non-ROI removal is on");
    if (!nonroi_removal && zdist != nullptr)
        throw ConfigError("total_condition_loss: z-dist term requires non-ROI removal");
    auto total = scale(ce, static_cast<T>(w.lambda_ce));
    total = add_scaled(total, add(l1, l1_masked), static_cast<T>(w.lambda_l1));
    total = add(total, add(vgg, vgg_masked));
    total = add(total, cgan_g);
    total = add_scaled(total, tv, static_cast<T>(w.lambda_tv));
    if (zdist) total = add(total, *zdist);
    return total;
}

}  // namespace sdwarp
