#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sdwarp/gradcheck.hpp"
#include "sdwarp/losses.hpp"
#include "sdwarp/rng.hpp"

using namespace sdwarp;

namespace {

double tv_oracle(const Tensor<double>& f) {  // [2,h,w], brute-force neighbor sum
    const int64_t h = f.dim(1), w = f.dim(2);
    double acc = 0;
    for (int64_t c = 0; c < 2; ++c)
        for (int64_t y = 0; y < h; ++y)
            for (int64_t x = 0; x < w; ++x) {
                if (x + 1 < w) acc += std::abs(f.at3(c, y, x + 1) - f.at3(c, y, x));
                if (y + 1 < h) acc += std::abs(f.at3(c, y + 1, x) - f.at3(c, y, x));
            }
    return acc / static_cast<double>(h * w);
}

Tensor<double> rand_mask(Rng& rng, int64_t h, int64_t w, double p = 0.5) {
    Tensor<double> m({1, h, w});
    for (int64_t i = 0; i < m.numel(); ++i) m[i] = rng.uniform(0, 1) < p ? 1.0 : 0.0;
    return m;
}

}  // namespace

TEST_CASE("tv_loss basics and oracle") {
    auto constant = FlowField2D<double>::zeros(4, 5);
    constant.offsets.fill(0.37);
    CHECK(tv_loss(constant) == 0.0);

    CHECK(tv_loss(FlowField2D<double>::zeros(1, 1)) == 0.0);

    // 2x2 per-channel values [[0,1],[0,1]]: horizontal diffs 2*|1-0| per
    // channel, vertical 0; normalized by 4 pixels.
    auto f = FlowField2D<double>::zeros(2, 2);
    for (int64_t c = 0; c < 2; ++c) {
        f.offsets.at3(c, 0, 1) = 1.0;
        f.offsets.at3(c, 1, 1) = 1.0;
    }
    CHECK(tv_loss(f) == doctest::Approx(tv_oracle(f.offsets)));
    CHECK(tv_loss(f) == doctest::Approx(1.0));

    Rng rng(42);
    for (int rep = 0; rep < 30; ++rep) {
        FlowField2D<double> r(Tensor<double>({2, 5, 6}));
        rng.fill_uniform(r.offsets, -2, 2);
        CHECK(tv_loss(r) == doctest::Approx(tv_oracle(r.offsets)).epsilon(1e-12));
        CHECK(tv_loss(r) >= 0.0);
        // translation invariance, exact
        FlowField2D<double> shifted(Tensor<double>(r.offsets.shape()));
        for (int64_t i = 0; i < r.offsets.numel(); ++i) shifted.offsets[i] = r.offsets[i] + 0.25;
        CHECK(tv_loss(shifted) == tv_loss(r));
    }
}

TEST_CASE("tv_loss gradient") {
    Rng rng(1);
    Tensor<double> f({1, 2, 4, 4});
    rng.fill_uniform(f, -1, 1);
    auto fn = [](const std::vector<Var<double>>& in) { return tv_loss_op(in[0]); };
    CHECK(finite_diff_check<double>(fn, {f}, 1e-6).worst < 1e-6);
}

TEST_CASE("masked_l1 basics") {
    Rng rng(2);
    Tensor<double> a({1, 4, 4});
    rng.fill_uniform(a, 0, 1);
    Tensor<double> zero_mask({1, 4, 4});
    CHECK(masked_l1_loss(a, a, zero_mask) == 0.0);

    Tensor<double> ones_mask = Tensor<double>::full({1, 4, 4}, 1.0);
    Tensor<double> b({1, 4, 4});
    rng.fill_uniform(b, 0, 1);
    CHECK(masked_l1_loss(a, b, ones_mask) == 0.0);

    // exclusion off: plain mean absolute difference
    double oracle = 0;
    for (int64_t i = 0; i < a.numel(); ++i) oracle += std::abs(a[i] - b[i]);
    oracle /= static_cast<double>(a.numel());
    CHECK(masked_l1_loss(a, b, zero_mask) == doctest::Approx(oracle).epsilon(1e-12));

    Tensor<double> nonbin = Tensor<double>::full({1, 4, 4}, 0.5);
    CHECK_THROWS_AS(masked_l1_loss(a, b, nonbin), ArgumentError);

    Tensor<double> wrong({1, 3, 4});
    CHECK_THROWS_AS(masked_l1_loss(a, wrong, zero_mask), ArgumentError);
}

TEST_CASE("masked_l1 gradient") {
    Rng rng(3);
    Tensor<double> p({1, 2, 4, 4});
    Tensor<double> t({1, 2, 4, 4});
    rng.fill_uniform(p, -1, 1);
    rng.fill_uniform(t, -1, 1);
    Tensor<double> m({1, 1, 4, 4});
    for (int64_t i = 0; i < m.numel(); ++i) m[i] = rng.uniform(0, 1) < 0.3 ? 1.0 : 0.0;
    auto fn = [&](const std::vector<Var<double>>& in) { return masked_l1_op(in[0], t, m); };
    CHECK(finite_diff_check<double>(fn, {p}, 1e-6).worst < 1e-6);
}

TEST_CASE("ce_loss examples") {
    // strong one-hot logits -> loss ~ 0
    Tensor<double> logits({6, 2, 2});
    Tensor<int32_t> labels({2, 2});
    Rng rng(4);
    for (int64_t p = 0; p < 4; ++p) {
        const int32_t lab = rng.uniform_int(0, 5);
        labels[p] = lab;
        for (int64_t c = 0; c < 6; ++c) logits[c * 4 + p] = c == lab ? 50.0 : -50.0;
    }
    CHECK(ce_loss(logits, labels) < 1e-9);

    // uniform logits over 6 labels -> ln 6
    Tensor<double> uniform({6, 3, 3});
    Tensor<int32_t> labs({3, 3});
    for (int64_t p = 0; p < 9; ++p) labs[p] = static_cast<int32_t>(p % 6);
    CHECK(ce_loss(uniform, labs) == doctest::Approx(std::log(6.0)).epsilon(1e-12));

    // single pixel hand oracle
    Tensor<double> one({3, 1, 1});
    one[0] = 0.3;
    one[1] = -1.1;
    one[2] = 2.0;
    Tensor<int32_t> l1({1, 1});
    l1[0] = 2;
    const double z = std::exp(0.3) + std::exp(-1.1) + std::exp(2.0);
    CHECK(ce_loss(one, l1) == doctest::Approx(-std::log(std::exp(2.0) / z)).epsilon(1e-12));

    Tensor<int32_t> bad({1, 1});
    bad[0] = 7;
    CHECK_THROWS_AS(ce_loss(one, bad), ArgumentError);
}

TEST_CASE("ce_loss gradient") {
    Rng rng(5);
    Tensor<double> logits({1, 4, 3, 3});
    rng.fill_uniform(logits, -2, 2);
    Tensor<int32_t> labels({1, 3, 3});
    for (int64_t i = 0; i < labels.numel(); ++i) labels[i] = rng.uniform_int(0, 3);
    auto fn = [&](const std::vector<Var<double>>& in) { return ce_loss_op(in[0], labels); };
    CHECK(finite_diff_check<double>(fn, {logits}, 1e-6).worst < 1e-6);
}

TEST_CASE("zdist examples and gradient") {
    LossWeights w;
    auto grid = make_identity_grid_3d<double>(3, 4);
    FlowField3D<double> f(grid);
    const int64_t hw = 12;

    Tensor<double> sc_all = Tensor<double>::full({1, 3, 4}, 1.0);
    // base grid has z=-1 at depth 0: ROI at target
    CHECK(zdist_loss(f, sc_all, w) == 0.0);

    Tensor<double> sc_none({1, 3, 4});
    Tensor<double> coords = grid;
    for (int64_t p = 0; p < hw; ++p) coords[(2 * 2 + 0) * hw + p] = 1.0;
    FlowField3D<double> fplus(coords);
    CHECK(zdist_loss(fplus, sc_none, w) == 0.0);
    CHECK(zdist_loss(fplus, sc_all, w) == doctest::Approx(2.0));

    Rng rng(6);
    Tensor<double> c({1, 3, 2, 3, 4});
    rng.fill_uniform(c, -1, 1);
    Tensor<double> m({1, 1, 3, 4});
    for (int64_t i = 0; i < m.numel(); ++i) m[i] = rng.uniform(0, 1) < 0.5 ? 1.0 : 0.0;
    auto fn = [&](const std::vector<Var<double>>& in) { return zdist_loss_op(in[0], m, w); };
    CHECK(finite_diff_check<double>(fn, {c}, 1e-6).worst < 1e-6);
}

TEST_CASE("lsgan optima") {
    auto mk = [](double v) { return constant(Tensor<double>::full({2, 3}, v)); };
    CHECK(lsgan_d_loss(mk(1.0), mk(0.0))->value[0] == doctest::Approx(0.0));
    CHECK(lsgan_g_loss(mk(0.0))->value[0] == doctest::Approx(0.5));
    CHECK(lsgan_g_loss(mk(1.0))->value[0] == doctest::Approx(0.0));
    CHECK(lsgan_d_loss(mk(0.5), mk(0.5))->value[0] == doctest::Approx(0.25));
    CHECK(lsgan_g_loss(mk(0.5))->value[0] == doctest::Approx(0.125));
}

TEST_CASE("lsgan generator gradient through softmax") {
    Rng rng(7);
    Tensor<double> logits({1, 3, 4, 4});
    rng.fill_uniform(logits, -1, 1);
    Tensor<double> dw({1, 3, 3, 3});
    rng.fill_uniform(dw, -0.5, 0.5);
    Tensor<double> db({1});
    auto fn = [&](const std::vector<Var<double>>& in) {
        auto soft = softmax_channels(in[0]);
        auto d_out = conv2d(soft, constant(dw), constant(db), 1, 1);
        return lsgan_g_loss(d_out);
    };
    CHECK(finite_diff_check<double>(fn, {logits}, 1e-6).worst < 1e-5);
}

TEST_CASE("masked perceptual loss") {
    Rng rng(8);
    Tensor<double> a({1, 3, 16, 16});
    rng.fill_uniform(a, -1, 1);
    Tensor<double> keep = Tensor<double>::full({1, 1, 16, 16}, 1.0);

    auto ext = PerceptualExtractor<double>::frozen_default();
    // identical inputs -> 0
    CHECK(ext.loss(make_var(a, true), a, keep)->value[0] == doctest::Approx(0.0));

    Tensor<double> b({1, 3, 16, 16});
    rng.fill_uniform(b, -1, 1);
    // empty keep mask -> 0
    Tensor<double> none({1, 1, 16, 16});
    CHECK(ext.loss(make_var(a, true), b, none)->value[0] == doctest::Approx(0.0));

    // identity configuration reduces to masked L1 on pixels
    auto id = PerceptualExtractor<double>::identity();
    Tensor<double> m = rand_mask(rng, 16, 16, 0.4);
    Tensor<double> keep_m({1, 1, 16, 16});
    for (int64_t i = 0; i < m.numel(); ++i) keep_m[i] = m[i];
    Tensor<double> excl({1, 1, 16, 16});
    for (int64_t i = 0; i < m.numel(); ++i) excl[i] = 1.0 - m[i];
    const double got = id.loss(make_var(a, true), b, keep_m)->value[0];
    const double expect = masked_l1_op(constant(a), b, excl)->value[0];
    CHECK(got == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("masked perceptual gradient") {
    Rng rng(9);
    Tensor<double> a({1, 3, 8, 8});
    Tensor<double> b({1, 3, 8, 8});
    rng.fill_uniform(a, -1, 1);
    rng.fill_uniform(b, -1, 1);
    Tensor<double> keep = Tensor<double>::full({1, 1, 8, 8}, 1.0);
    auto ext = PerceptualExtractor<double>::frozen_default();
    auto fn = [&](const std::vector<Var<double>>& in) { return ext.loss(in[0], b, keep); };
    CHECK(finite_diff_check<double>(fn, {a}, 1e-6).worst < 1e-5);
}

TEST_CASE("total condition loss recomposition") {
    auto unit = []() { return constant(Tensor<double>::full({1}, 1.0)); };
    auto zero = []() { return constant(Tensor<double>::full({1}, 0.0)); };
    LossWeights w;

    auto z = unit();
    auto total = total_condition_loss(unit(), unit(), unit(), unit(), unit(), unit(), unit(), &z,
                                      true, w);
    CHECK(total->value[0] == doctest::Approx(36.0));  // 10 + 10*2 + 2 + 1 + 2 + 1

    auto total0 = total_condition_loss(zero(), zero(), zero(), zero(), zero(), zero(), zero(),
                                       nullptr, false, w);
    CHECK(total0->value[0] == doctest::Approx(0.0));

    // topology/term mismatches are configuration errors
    CHECK_THROWS_AS(total_condition_loss(unit(), unit(), unit(), unit(), unit(), unit(), unit(),
                                         nullptr, true, w),
                    ConfigError);
    auto z2 = unit();
    CHECK_THROWS_AS(total_condition_loss(unit(), unit(), unit(), unit(), unit(), unit(), unit(),
                                         &z2, false, w),
                    ConfigError);
}

TEST_CASE("loss report recompose and json") {
    LossWeights w;
    LossReport r;
    r.tv = 0.1;
    r.ce = 0.5;
    r.l1 = 0.2;
    r.l1_masked = 0.05;
    r.vgg = 0.3;
    r.vgg_masked = 0.1;
    r.cgan_g = 0.4;
    r.zdist = 0.7;
    r.zdist_active = true;
    r.total = r.recompose(w);
    CHECK(std::abs(r.total - (10 * 0.5 + 10 * 0.25 + 0.4 + 0.4 + 2 * 0.1 + 0.7)) < 1e-6);
    r.zdist_active = false;
    CHECK(std::abs(r.recompose(w) - (10 * 0.5 + 10 * 0.25 + 0.4 + 0.4 + 2 * 0.1)) < 1e-9);
    const std::string line = r.json_line(17);
    CHECK(line.find("\"step\":17") != std::string::npos);
    CHECK(line.find("\"total\":") != std::string::npos);
}
