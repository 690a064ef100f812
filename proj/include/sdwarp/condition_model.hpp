#pragma once

#include "sdwarp/config.hpp"
#include "sdwarp/nn.hpp"

namespace sdwarp {

template <typename T>
struct BatchInputs {
    Tensor<T> clothes;          // c    [N,3,H,W]
    Tensor<T> clothes_mask;     // c_m  [N,1,H,W]
    Tensor<T> agnostic_onehot;  // S_a  [N,L,H,W]
    Tensor<T> pose;             // P    [N,3,H,W]
};

template <typename T>
struct ConditionOutputs {
    std::vector<Var<T>> tvob_flows;   // F_f0..F_f4, offsets [N,2,h_l,w_l]
    std::vector<Var<T>> flow_deltas;  // per-level predicted deltas (probe anchors)
    Var<T> taco_flow_2d;              // offsets [N,2,H,W] (sequential, 2D variant)
    Var<T> taco_flow_3d;              // absolute coords [N,3,2,H,W] (3D variant)
    Var<T> warped_clothes_tvob;       // S(c, F_f4)
    Var<T> warped_mask_tvob;
    Var<T> warped_clothes;            // final warp (TACO if present)
    Var<T> warped_mask;
    Var<T> layout_logits;             // [N,L,H,W]
    Var<T> seg_feature;               // F_s4
};

// Post-processed condition outputs: argmax layout (ties -> lowest label),
// warped mask gated by the predicted upper-clothes region, gated clothes.
template <typename T>
struct PostProcessed {
    Tensor<int32_t> layout;       // [N,H,W]
    Tensor<T> clothes_region;     // \hat S_c [N,1,H,W]
    Tensor<T> warped_clothes;     // \hat I_c [N,3,H,W]
};

template <typename T>
PostProcessed<T> post_process(const Tensor<T>& layout_logits, const Tensor<T>& warped_clothes,
                              const Tensor<T>& warped_mask) {
    const int64_t N = layout_logits.dim(0), L = layout_logits.dim(1);
    const int64_t H = layout_logits.dim(2), W = layout_logits.dim(3);
    PostProcessed<T> out;
    out.layout = Tensor<int32_t>({N, H, W});
    out.clothes_region = Tensor<T>({N, 1, H, W});
    out.warped_clothes = Tensor<T>({N, 3, H, W});
    const int64_t HW = H * W;
    for (int64_t n = 0; n < N; ++n)
        for (int64_t p = 0; p < HW; ++p) {
            int32_t best = 0;
            T bestv = layout_logits[(n * L + 0) * HW + p];
            for (int64_t c = 1; c < L; ++c) {
                const T v = layout_logits[(n * L + c) * HW + p];
                if (v > bestv) {  // strict: ties keep the lowest label index
                    bestv = v;
                    best = static_cast<int32_t>(c);
                }
            }
            out.layout[n * HW + p] = best;
            const T clamped = std::clamp(warped_mask[n * HW + p], T(0), T(1));
            const T gate = best == kUpperClothes ? clamped : T(0);
            out.clothes_region[n * HW + p] = gate;
            for (int64_t c = 0; c < 3; ++c)
                out.warped_clothes[(n * 3 + c) * HW + p] =
                    warped_clothes[(n * 3 + c) * HW + p] * gate;
        }
    return out;
}

// Try-on condition generator: two 5-level pyramid encoders, four fusion
// blocks with the residual flow recurrence, and a last block that optionally
// adds the sequentially connected TACO stage (2D, or 3D with the 0-filled
// depth plane).
template <typename T>
class ConditionGenerator {
public:
    explicit ConditionGenerator(const TopologyConfig& topo, uint64_t seed = 0) : topo_(topo) {
        topo_.validate();
        Rng rng(Rng::derive(seed, 0xC0DE));
        const auto& ch = topo_.channels;
        const int64_t L = topo_.label_count;

        enc_c_in_ = ConvBlock<T>::create(store_, rng, "enc_c.in", 4, ch[4], 1);
        enc_s_in_ = ConvBlock<T>::create(store_, rng, "enc_s.in", L + 3, ch[4], 1);
        for (int l = 3; l >= 0; --l) {
            enc_c_down_[l] = ConvBlock<T>::create(store_, rng, "enc_c.down" + std::to_string(l),
                                                  ch[l + 1], ch[l], 2);
            enc_s_down_[l] = ConvBlock<T>::create(store_, rng, "enc_s.down" + std::to_string(l),
                                                  ch[l + 1], ch[l], 2);
        }

        seg0_ = ConvBlock<T>::create(store_, rng, "fuse0.seg", 2 * ch[0], ch[0], 1);
        flow0_hidden_ = ConvBlock<T>::create(store_, rng, "fuse0.flow_hidden", 2 * ch[0], ch[0], 1);
        flow0_head_ =
            Conv2dLayer<T>::create(store_, rng, "fuse0.flow_head", ch[0], 2, 3, 1, 1, Init::Zero);

        for (int l = 1; l <= 4; ++l) {
            const std::string base = "fuse" + std::to_string(l);
            const int64_t cin_flow = ch[l] + ch[l - 1] + ch[l];
            flow_hidden_[l - 1] =
                ConvBlock<T>::create(store_, rng, base + ".flow_hidden", cin_flow, ch[l], 1);
            flow_head_[l - 1] =
                Conv2dLayer<T>::create(store_, rng, base + ".flow_head", ch[l], 2, 3, 1, 1,
                                       Init::Zero);
            const int64_t cin_seg = ch[l] + ch[l - 1] + ch[l];
            seg_[l - 1] = ConvBlock<T>::create(store_, rng, base + ".seg", cin_seg, ch[l], 1);
        }

        if (topo_.connection == Connection::Sequential) {
            taco_hidden_ =
                ConvBlock<T>::create(store_, rng, "taco.hidden", 2 * ch[4], ch[4], 1, false);
            if (topo_.nonroi_removal) {
                taco_conv3d_a_ = Conv3dLayer<T>::create(store_, rng, "taco.conv3d_a", ch[4], ch[4]);
                taco_conv3d_head_ =
                    Conv3dLayer<T>::create(store_, rng, "taco.conv3d_head", ch[4], 3, Init::Zero);
            } else {
                taco_head_2d_ = Conv2dLayer<T>::create(store_, rng, "taco.head_2d", ch[4], 2, 3, 1,
                                                       1, Init::Zero);
            }
        }

        const int64_t layout_in = 3 + L + 3 + 1 + ch[4];
        layout_head_ = Conv2dLayer<T>::create(store_, rng, "layout.head", layout_in, L, 3, 1, 1);
    }

    const TopologyConfig& topology() const { return topo_; }
    ParamStore<T>& store() { return store_; }
    const ParamStore<T>& store() const { return store_; }

    ConditionOutputs<T> forward(GraphBind<T>& bind, const BatchInputs<T>& in,
                                bool frozen = false) const {
        const int64_t N = in.clothes.dim(0);
        const int64_t H = in.clothes.dim(2), W = in.clothes.dim(3);
        if (H % 16 != 0 || W % 16 != 0)
            throw ArgumentError("condition_forward: resolution must be divisible by 16");

        auto c_in = concat_channels<T>({constant(in.clothes), constant(in.clothes_mask)});
        auto s_in = concat_channels<T>({constant(in.agnostic_onehot), constant(in.pose)});

        // pyramids, level 4 (full res) down to level 0
        std::array<Var<T>, 5> ec, es;
        ec[4] = enc_c_in_(bind, c_in, frozen);
        es[4] = enc_s_in_(bind, s_in, frozen);
        for (int l = 3; l >= 0; --l) {
            ec[l] = enc_c_down_[l](bind, ec[l + 1], frozen);
            es[l] = enc_s_down_[l](bind, es[l + 1], frozen);
        }

        ConditionOutputs<T> out;
        out.tvob_flows.resize(5);
        out.flow_deltas.resize(5);

        // level-0 fusion: no previous state
        Var<T> fs_prev;
        {
            auto cat = concat_channels<T>({ec[0], es[0]});
            auto delta = flow0_head_(bind, flow0_hidden_(bind, cat, frozen), frozen);
            out.flow_deltas[0] = delta;
            out.tvob_flows[0] = delta;  // empty previous flow
            fs_prev = seg0_(bind, cat, frozen);
        }

        for (int l = 1; l <= 4; ++l) {
            auto up_flow = upsample_bilinear(out.tvob_flows[l - 1], 2);
            auto up_fs = upsample_bilinear(fs_prev, 2);
            auto warped_ec = grid_sample_2d_op(ec[l], up_flow, Padding::Border);
            auto cat = concat_channels<T>({warped_ec, up_fs, es[l]});
            auto delta = flow_head_[l - 1](bind, flow_hidden_[l - 1](bind, cat, frozen), frozen);
            out.flow_deltas[l] = delta;
            out.tvob_flows[l] = add(up_flow, delta);  // residual recurrence
            auto warped_ec2 = grid_sample_2d_op(ec[l], out.tvob_flows[l], Padding::Border);
            fs_prev = seg_[l - 1](bind, concat_channels<T>({es[l], up_fs, warped_ec2}), frozen);
        }
        out.seg_feature = fs_prev;

        auto clothes_v = constant(in.clothes);
        auto mask_v = constant(in.clothes_mask);
        out.warped_clothes_tvob =
            grid_sample_2d_op(clothes_v, out.tvob_flows[4], Padding::Border);
        out.warped_mask_tvob = grid_sample_2d_op(mask_v, out.tvob_flows[4], Padding::Zeros);

        if (topo_.connection == Connection::ResidualBaseline) {
            out.warped_clothes = out.warped_clothes_tvob;
            out.warped_mask = out.warped_mask_tvob;
        } else {
            auto warped_ec4 = grid_sample_2d_op(ec[4], out.tvob_flows[4], Padding::Border);
            auto taco_in = concat_channels<T>({warped_ec4, es[4]});
            auto hidden = taco_hidden_(bind, taco_in, frozen);
            if (!topo_.nonroi_removal) {
                // 2D TACO: a second flow, composed (never summed with F_f4)
                auto f2d = taco_head_2d_(bind, hidden, frozen);
                out.taco_flow_2d = f2d;
                out.warped_clothes =
                    grid_sample_2d_op(out.warped_clothes_tvob, f2d, Padding::Border);
                out.warped_mask = grid_sample_2d_op(out.warped_mask_tvob, f2d, Padding::Zeros);
            } else {
                // 3D TACO over the 0-filled depth plane
                auto vol_feat = stack_zero_depth_op(hidden);
                auto h3 = leaky_relu(taco_conv3d_a_(bind, vol_feat, frozen), T(0.2));
                auto raw = taco_conv3d_head_(bind, h3, frozen);
                auto base = base_grid_batch(N, H, W);
                auto coords = add(raw, constant(std::move(base)));
                out.taco_flow_3d = coords;
                out.warped_clothes = take_depth(
                    grid_sample_3d_op(stack_zero_depth_op(out.warped_clothes_tvob), coords,
                                      Padding::Border),
                    0);
                out.warped_mask = take_depth(
                    grid_sample_3d_op(stack_zero_depth_op(out.warped_mask_tvob), coords,
                                      Padding::Zeros),
                    0);
            }
        }

        auto layout_in = concat_channels<T>({constant(in.pose), constant(in.agnostic_onehot),
                                             out.warped_clothes, out.warped_mask,
                                             out.seg_feature});
        out.layout_logits = layout_head_(bind, layout_in, frozen);
        return out;
    }

    // Forces the TACO stage to the identity refinement: zero head weights so
    // the 3D flow equals the base grid (xy identity, z=-1 at depth 0), or the
    // 2D flow equals zero offsets.
    void force_taco_identity() {
        if (topo_.connection != Connection::Sequential)
            throw ConfigError("force_taco_identity: topology has no TACO stage");
        if (topo_.nonroi_removal) {
            taco_conv3d_head_.w->value.zero();
            taco_conv3d_head_.b->value.zero();
        } else {
            taco_head_2d_.w->value.zero();
            taco_head_2d_.b->value.zero();
        }
    }

    static Tensor<T> base_grid_batch(int64_t N, int64_t H, int64_t W) {
        Tensor<T> single = make_identity_grid_3d<T>(H, W);
        Tensor<T> out({N, 3, 2, H, W});
        for (int64_t n = 0; n < N; ++n)
            std::memcpy(out.data() + n * single.numel(), single.data(),
                        sizeof(T) * static_cast<size_t>(single.numel()));
        return out;
    }

private:
    TopologyConfig topo_;
    ParamStore<T> store_;
    ConvBlock<T> enc_c_in_, enc_s_in_;
    std::array<ConvBlock<T>, 4> enc_c_down_, enc_s_down_;
    ConvBlock<T> seg0_, flow0_hidden_;
    Conv2dLayer<T> flow0_head_;
    std::array<ConvBlock<T>, 4> flow_hidden_, seg_;
    std::array<Conv2dLayer<T>, 4> flow_head_;
    ConvBlock<T> taco_hidden_;
    Conv2dLayer<T> taco_head_2d_;
    Conv3dLayer<T> taco_conv3d_a_, taco_conv3d_head_;
    Conv2dLayer<T> layout_head_;
};

// LSGAN terms for the layout discriminator. The fake pathway keeps gradients
// flowing through the softmaxed logits (and so through the warped clothes via
// the layout head); the discriminator term sees the logits detached.
template <typename T>
struct CganTerms {
    Var<T> generator;
    Var<T> discriminator;
};

template <typename T>
CganTerms<T> cgan_losses(const PatchDiscriminator<T>& disc, GraphBind<T>& bind_g,
                         GraphBind<T>& bind_d, const BatchInputs<T>& in,
                         const Tensor<int32_t>& real_labels, const Var<T>& fake_logits,
                         int64_t label_count) {
    auto cond = [&]() {
        return std::vector<Var<T>>{constant(in.clothes_mask), constant(in.agnostic_onehot),
                                   constant(in.pose)};
    };
    // generator term: D frozen, gradients reach fake_logits
    auto fake_soft = softmax_channels(fake_logits);
    std::vector<Var<T>> gin = cond();
    gin.insert(gin.begin(), fake_soft);
    auto d_fake_g = disc.forward(bind_g, concat_channels<T>(gin), /*frozen=*/true);

    // discriminator term: fake detached, D parameters live
    std::vector<Var<T>> fin = cond();
    fin.insert(fin.begin(), constant(fake_soft->value));
    auto d_fake_d = disc.forward(bind_d, concat_channels<T>(fin), /*frozen=*/false);
    std::vector<Var<T>> rin = cond();
    rin.insert(rin.begin(), constant(one_hot<T>(real_labels, label_count)));
    auto d_real_d = disc.forward(bind_d, concat_channels<T>(rin), /*frozen=*/false);

    CganTerms<T> t;
    t.generator = lsgan_g_loss(d_fake_g);
    t.discriminator = lsgan_d_loss(d_real_d, d_fake_d);
    return t;
}

}  // namespace sdwarp
