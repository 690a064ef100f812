#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sdwarp/kernels.hpp"
#include "sdwarp/rng.hpp"

using namespace sdwarp;

namespace {

// Independent brute-force bilinear reference: absolute normalized coords in,
// 4-tap interpolation written out longhand.
template <typename T>
double ref_bilinear(const Tensor<T>& img, int64_t c, double ax, double ay, Padding pad) {
    const int64_t H = img.dim(1), W = img.dim(2);
    const double px = (ax + 1.0) * 0.5 * static_cast<double>(W) - 0.5;
    const double py = (ay + 1.0) * 0.5 * static_cast<double>(H) - 0.5;
    const int64_t x0 = static_cast<int64_t>(std::floor(px));
    const int64_t y0 = static_cast<int64_t>(std::floor(py));
    const double fx = px - std::floor(px), fy = py - std::floor(py);
    auto fetch = [&](int64_t yy, int64_t xx) -> double {
        if (pad == Padding::Border) {
            yy = std::clamp(yy, int64_t(0), H - 1);
            xx = std::clamp(xx, int64_t(0), W - 1);
            return static_cast<double>(img.at3(c, yy, xx));
        }
        if (yy < 0 || yy >= H || xx < 0 || xx >= W) return 0.0;
        return static_cast<double>(img.at3(c, yy, xx));
    };
    return (1 - fy) * ((1 - fx) * fetch(y0, x0) + fx * fetch(y0, x0 + 1)) +
           fy * ((1 - fx) * fetch(y0 + 1, x0) + fx * fetch(y0 + 1, x0 + 1));
}

template <typename T>
Tensor<T> random_tensor(Rng& rng, std::vector<int64_t> shape, double lo = -1, double hi = 1) {
    Tensor<T> t(std::move(shape));
    rng.fill_uniform(t, lo, hi);
    return t;
}

}  // namespace

TEST_CASE("identity grid coordinates") {
    auto g1 = make_identity_grid<double>(1, 1);
    CHECK(g1.coords.at3(0, 0, 0) == doctest::Approx(0.0));
    CHECK(g1.coords.at3(1, 0, 0) == doctest::Approx(0.0));

    auto g2 = make_identity_grid<double>(2, 2);
    CHECK(g2.coords.at3(0, 0, 0) == doctest::Approx(-0.5));
    CHECK(g2.coords.at3(0, 0, 1) == doctest::Approx(0.5));
    CHECK(g2.coords.at3(0, 1, 0) == doctest::Approx(-0.5));
    // oracle: pixel centers 2*(i+0.5)/n - 1
    for (int64_t i = 0; i < 2; ++i)
        CHECK(g2.coords.at3(1, i, 0) == doctest::Approx(2.0 * (i + 0.5) / 2.0 - 1.0));

    auto g3 = make_identity_grid<double>(3, 3);
    CHECK(g3.coords.at3(0, 1, 1) == doctest::Approx(0.0));
    CHECK(g3.coords.at3(1, 1, 1) == doctest::Approx(0.0));

    CHECK_THROWS_AS(make_identity_grid<double>(0, 3), ArgumentError);
    CHECK_THROWS_AS(make_identity_grid<double>(3, -1), ArgumentError);
}

TEST_CASE("grid_sample_2d identity and shift") {
    Rng rng(7);
    for (int rep = 0; rep < 10; ++rep) {
        auto img = random_tensor<double>(rng, {3, 5, 4});
        auto out = grid_sample_2d(img, FlowField2D<double>::zeros(5, 4), Padding::Border);
        CHECK(max_abs_diff(img, out) < 1e-6);
        auto outz = grid_sample_2d(img, FlowField2D<double>::zeros(5, 4), Padding::Zeros);
        CHECK(max_abs_diff(img, outz) < 1e-6);
    }

    // 1x2x2 ramp, x-offset of exactly one pixel (2/W normalized), border pad.
    auto ramp = Tensor<double>::from_data({1, 2, 2}, {0, 1, 2, 3});
    auto flow = FlowField2D<double>::zeros(2, 2);
    for (int64_t y = 0; y < 2; ++y)
        for (int64_t x = 0; x < 2; ++x) flow.offsets.at3(0, y, x) = 2.0 / 2.0;
    auto shifted = grid_sample_2d(ramp, flow, Padding::Border);
    CHECK(shifted.at3(0, 0, 0) == doctest::Approx(1.0));
    CHECK(shifted.at3(0, 0, 1) == doctest::Approx(1.0));
    CHECK(shifted.at3(0, 1, 0) == doctest::Approx(3.0));
    CHECK(shifted.at3(0, 1, 1) == doctest::Approx(3.0));
    // cross-check against the independent 4-tap oracle
    auto grid = make_identity_grid<double>(2, 2);
    for (int64_t y = 0; y < 2; ++y)
        for (int64_t x = 0; x < 2; ++x) {
            const double ax = grid.coords.at3(0, y, x) + flow.offsets.at3(0, y, x);
            const double ay = grid.coords.at3(1, y, x) + flow.offsets.at3(1, y, x);
            CHECK(shifted.at3(0, y, x) ==
                  doctest::Approx(ref_bilinear(ramp, 0, ax, ay, Padding::Border)));
        }

    // every pixel far outside [-1,1] with zeros padding -> all-zero output
    auto farflow = FlowField2D<double>::zeros(2, 2);
    farflow.offsets.fill(5.0);
    auto zero_out = grid_sample_2d(ramp, farflow, Padding::Zeros);
    for (int64_t i = 0; i < zero_out.numel(); ++i) CHECK(zero_out[i] == 0.0);
}

TEST_CASE("grid_sample_2d random agreement with oracle") {
    Rng rng(21);
    for (int rep = 0; rep < 50; ++rep) {
        const int64_t h = rng.uniform_int(2, 7), w = rng.uniform_int(2, 7);
        const int64_t c = rng.uniform_int(1, 3);
        auto img = random_tensor<double>(rng, {c, h, w});
        FlowField2D<double> flow(random_tensor<double>(rng, {2, h, w}, -1.5, 1.5));
        const Padding pad = rep % 2 ? Padding::Border : Padding::Zeros;
        auto out = grid_sample_2d(img, flow, pad);
        auto grid = make_identity_grid<double>(h, w);
        for (int64_t k = 0; k < c; ++k)
            for (int64_t y = 0; y < h; ++y)
                for (int64_t x = 0; x < w; ++x) {
                    const double ax = grid.coords.at3(0, y, x) + flow.offsets.at3(0, y, x);
                    const double ay = grid.coords.at3(1, y, x) + flow.offsets.at3(1, y, x);
                    CHECK(out.at3(k, y, x) ==
                          doctest::Approx(ref_bilinear(img, k, ax, ay, pad)).epsilon(1e-10));
                }
    }
}

TEST_CASE("grid_sample_2d error cases") {
    auto img = Tensor<double>({1, 4, 4});
    CHECK_THROWS_AS(grid_sample_2d(img, FlowField2D<double>::zeros(3, 4), Padding::Border),
                    ArgumentError);
    auto bad = FlowField2D<double>::zeros(4, 4);
    bad.offsets[0] = std::nan("");
    CHECK_THROWS_AS(grid_sample_2d(img, bad, Padding::Border), NumericError);
}

TEST_CASE("grid_sample_2d linearity in input") {
    Rng rng(33);
    for (int rep = 0; rep < 20; ++rep) {
        auto x = random_tensor<double>(rng, {2, 6, 5});
        auto y = random_tensor<double>(rng, {2, 6, 5});
        FlowField2D<double> flow(random_tensor<double>(rng, {2, 6, 5}, -0.5, 0.5));
        const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
        Tensor<double> mix({2, 6, 5});
        for (int64_t i = 0; i < mix.numel(); ++i) mix[i] = a * x[i] + b * y[i];
        auto lhs = grid_sample_2d(mix, flow, Padding::Border);
        auto gx = grid_sample_2d(x, flow, Padding::Border);
        auto gy = grid_sample_2d(y, flow, Padding::Border);
        for (int64_t i = 0; i < lhs.numel(); ++i)
            CHECK(lhs[i] == doctest::Approx(a * gx[i] + b * gy[i]).epsilon(1e-9));
    }
}

TEST_CASE("grid_sample_3d depth semantics") {
    Rng rng(5);
    auto vol = random_tensor<double>(rng, {2, 2, 4, 3});
    const int64_t h = 4, w = 3;

    auto base = make_identity_grid_3d<double>(h, w);
    // z = -1 at depth 0 (the base grid): depth 0 output equals depth 0 input
    {
        FlowField3D<double> f(base);
        auto out = grid_sample_3d(vol, f, Padding::Border);
        for (int64_t c = 0; c < 2; ++c)
            for (int64_t p = 0; p < h * w; ++p)
                CHECK(out[(c * 2 + 0) * h * w + p] ==
                      doctest::Approx(vol[(c * 2 + 0) * h * w + p]).epsilon(1e-12));
    }
    // z = +1 on depth-0 slots: depth 0 output equals depth 1 input
    {
        Tensor<double> coords = base;
        for (int64_t p = 0; p < h * w; ++p) coords[(2 * 2 + 0) * h * w + p] = 1.0;
        FlowField3D<double> f(coords);
        auto out = grid_sample_3d(vol, f, Padding::Border);
        for (int64_t c = 0; c < 2; ++c)
            for (int64_t p = 0; p < h * w; ++p)
                CHECK(out[(c * 2 + 0) * h * w + p] ==
                      doctest::Approx(vol[(c * 2 + 1) * h * w + p]).epsilon(1e-12));
    }
    // z = 0: elementwise mean of both depths (trilinear weights 0.5/0.5)
    {
        Tensor<double> coords = base;
        for (int64_t p = 0; p < h * w; ++p) coords[(2 * 2 + 0) * h * w + p] = 0.0;
        FlowField3D<double> f(coords);
        auto out = grid_sample_3d(vol, f, Padding::Border);
        for (int64_t c = 0; c < 2; ++c)
            for (int64_t p = 0; p < h * w; ++p) {
                const double expect = 0.5 * vol[(c * 2 + 0) * h * w + p] +
                                      0.5 * vol[(c * 2 + 1) * h * w + p];
                CHECK(out[(c * 2 + 0) * h * w + p] == doctest::Approx(expect).epsilon(1e-12));
            }
    }

    auto bad_vol = Tensor<double>({2, 3, 4, 3});
    CHECK_THROWS_AS(grid_sample_3d(bad_vol, FlowField3D<double>(base), Padding::Border),
                    ArgumentError);
}

TEST_CASE("depth-plane erasure is exact") {
    Rng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        const int64_t h = rng.uniform_int(3, 8), w = rng.uniform_int(3, 8);
        auto plane = random_tensor<double>(rng, {3, h, w});
        auto vol = stack_zero_depth(plane);
        Tensor<double> coords = make_identity_grid_3d<double>(h, w);
        // random xy offsets on top of identity; erased set E where z -> +1
        std::vector<char> erased(static_cast<size_t>(h * w));
        for (int64_t p = 0; p < h * w; ++p) {
            coords[(0 * 2 + 0) * h * w + p] += rng.uniform(-0.3, 0.3);
            coords[(1 * 2 + 0) * h * w + p] += rng.uniform(-0.3, 0.3);
            erased[static_cast<size_t>(p)] = rng.uniform(0, 1) < 0.4;
            if (erased[static_cast<size_t>(p)]) coords[(2 * 2 + 0) * h * w + p] = 1.0;
        }
        auto out = grid_sample_3d(vol, FlowField3D<double>(coords), Padding::Border);
        for (int64_t c = 0; c < 3; ++c)
            for (int64_t p = 0; p < h * w; ++p)
                if (erased[static_cast<size_t>(p)])
                    CHECK(out[(c * 2 + 0) * h * w + p] == 0.0);  // exactly zero
    }
}

TEST_CASE("upsample_flow") {
    // constant field stays constant
    auto f = FlowField2D<double>::zeros(3, 2);
    f.offsets.fill(0.3);
    auto up = upsample_flow(f, 2);
    CHECK(up.height() == 6);
    CHECK(up.width() == 4);
    for (int64_t i = 0; i < up.offsets.numel(); ++i)
        CHECK(up.offsets[i] == doctest::Approx(0.3).epsilon(1e-12));

    // factor 1 returns the identical field
    auto same = upsample_flow(f, 1);
    CHECK(bitwise_equal(same.offsets, f.offsets));

    // 1x2 field (0.0, 1.0), factor 2: closed-form bilinear oracle at output
    // centers (src = (j+0.5)/2 - 0.5, border clamped)
    auto tiny = FlowField2D<double>::zeros(1, 2);
    tiny.offsets.at3(0, 0, 0) = 0.0;
    tiny.offsets.at3(0, 0, 1) = 1.0;
    auto up2 = upsample_flow(tiny, 2);
    const double expect[4] = {0.0, 0.25, 0.75, 1.0};
    for (int64_t j = 0; j < 4; ++j)
        CHECK(up2.offsets.at3(0, 0, j) == doctest::Approx(expect[j]).epsilon(1e-12));

    CHECK_THROWS_AS(upsample_flow(f, 0), ArgumentError);
}

TEST_CASE("accumulate_flows") {
    Rng rng(3);
    auto zero = FlowField2D<double>::zeros(4, 4);
    FlowField2D<double> delta(random_tensor<double>(rng, {2, 4, 4}));
    auto acc = accumulate_flows(zero, delta);
    CHECK(bitwise_equal(acc.offsets, delta.offsets));

    auto a = FlowField2D<double>::zeros(2, 2);
    a.offsets.fill(0.1);
    auto b = FlowField2D<double>::zeros(2, 2);
    b.offsets.fill(0.2);
    auto c = accumulate_flows(a, b);
    for (int64_t i = 0; i < c.offsets.numel(); ++i)
        CHECK(c.offsets[i] == doctest::Approx(0.3).epsilon(1e-14));

    FlowField2D<double> r1(random_tensor<double>(rng, {2, 3, 5}));
    FlowField2D<double> r2(random_tensor<double>(rng, {2, 3, 5}));
    auto sum = accumulate_flows(r1, r2);
    for (int64_t i = 0; i < sum.offsets.numel(); ++i)
        CHECK(sum.offsets[i] == r1.offsets[i] + r2.offsets[i]);

    CHECK_THROWS_AS(accumulate_flows(a, r1), ArgumentError);
}

TEST_CASE("stack_zero_depth") {
    auto ones = Tensor<double>::full({2, 3, 3}, 1.0);
    auto vol = stack_zero_depth(ones);
    CHECK(vol.shape() == std::vector<int64_t>{2, 2, 3, 3});
    for (int64_t c = 0; c < 2; ++c)
        for (int64_t p = 0; p < 9; ++p) {
            CHECK(vol[(c * 2 + 0) * 9 + p] == 1.0);
            CHECK(vol[(c * 2 + 1) * 9 + p] == 0.0);
        }

    CHECK_THROWS_AS(stack_zero_depth(Tensor<double>({0, 3, 3})), ArgumentError);

    Rng rng(9);
    auto plane = random_tensor<double>(rng, {3, 4, 5});
    auto v2 = stack_zero_depth(plane);
    for (int64_t c = 0; c < 3; ++c)
        for (int64_t p = 0; p < 20; ++p) {
            CHECK(v2[(c * 2 + 0) * 20 + p] == plane[c * 20 + p]);
            CHECK(v2[(c * 2 + 1) * 20 + p] == 0.0);
        }
}

TEST_CASE("kernels are deterministic") {
    Rng rng(101);
    auto img = random_tensor<float>(rng, {3, 16, 12});
    FlowField2D<float> flow(random_tensor<float>(rng, {2, 16, 12}, -0.4, 0.4));
    auto a = grid_sample_2d(img, flow, Padding::Border);
    auto b = grid_sample_2d(img, flow, Padding::Border);
    CHECK(bitwise_equal(a, b));
    auto u1 = upsample_flow(flow, 3);
    auto u2 = upsample_flow(flow, 3);
    CHECK(bitwise_equal(u1.offsets, u2.offsets));
}
