#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sdwarp/gradcheck.hpp"
#include "sdwarp/ops.hpp"
#include "sdwarp/rng.hpp"

using namespace sdwarp;

namespace {

// Flow offsets whose sampling positions stay well inside interpolation cells
// and away from image borders, so central differences see a linear function.
Tensor<double> interior_flow(Rng& rng, int64_t h, int64_t w) {
    Tensor<double> off({2, h, w});
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x) {
            const int64_t tx = std::clamp<int64_t>(x + rng.uniform_int(-1, 1), 1, w - 3);
            const int64_t ty = std::clamp<int64_t>(y + rng.uniform_int(-1, 1), 1, h - 3);
            const double px = static_cast<double>(tx) + rng.uniform(0.25, 0.75);
            const double py = static_cast<double>(ty) + rng.uniform(0.25, 0.75);
            const double ax = (px + 0.5) * 2.0 / static_cast<double>(w) - 1.0;
            const double ay = (py + 0.5) * 2.0 / static_cast<double>(h) - 1.0;
            off.at3(0, y, x) = ax - identity_coord<double>(x, w);
            off.at3(1, y, x) = ay - identity_coord<double>(y, h);
        }
    return off;
}

Tensor<double> lift(const Tensor<double>& t) {
    std::vector<int64_t> s = t.shape();
    s.insert(s.begin(), 1);
    Tensor<double> out(s);
    std::memcpy(out.data(), t.data(), sizeof(double) * static_cast<size_t>(t.numel()));
    return out;
}

}  // namespace

TEST_CASE("elementwise ops backward") {
    Rng rng(1);
    Tensor<double> a({3, 4});
    Tensor<double> b({3, 4});
    rng.fill_uniform(a, -1, 1);
    rng.fill_uniform(b, -1, 1);
    for (auto op_idx : {0, 1, 2, 3, 4}) {
        auto fn = [op_idx](const std::vector<Var<double>>& in) -> Var<double> {
            switch (op_idx) {
                case 0: return sum(add(in[0], in[1]));
                case 1: return sum(sub(in[0], in[1]));
                case 2: return sum(mul(in[0], in[1]));
                case 3: return sum(square(in[0]));
                default: return mean(add_scaled(in[0], in[1], 0.7));
            }
        };
        auto rep = finite_diff_check<double>(fn, {a, b}, 1e-6);
        CHECK(rep.worst < 1e-7);
    }
}

TEST_CASE("accumulate (add) gradient is exactly one") {
    Rng rng(2);
    Tensor<double> a({2, 3, 3});
    Tensor<double> b({2, 3, 3});
    rng.fill_uniform(a, -1, 1);
    rng.fill_uniform(b, -1, 1);
    auto va = make_var(a, true);
    auto vb = make_var(b, true);
    auto s = sum(add(va, vb));
    backward(s);
    for (int64_t i = 0; i < a.numel(); ++i) {
        CHECK(va->grad[i] == 1.0);
        CHECK(vb->grad[i] == 1.0);
    }
}

TEST_CASE("grid_sample_2d gradients at interior points") {
    Rng rng(3);
    for (int rep = 0; rep < 5; ++rep) {
        Tensor<double> img({1, 2, 6, 6});
        rng.fill_uniform(img, -1, 1);
        auto flow = lift(interior_flow(rng, 6, 6));
        auto fn = [](const std::vector<Var<double>>& in) {
            return sum(grid_sample_2d_op(in[0], in[1], Padding::Border));
        };
        auto rep2 = finite_diff_check<double>(fn, {img, flow}, 1e-5);
        CHECK(rep2.worst < 1e-4);
    }
}

TEST_CASE("grid_sample_3d gradients at interior points") {
    Rng rng(4);
    for (int rep = 0; rep < 5; ++rep) {
        Tensor<double> vol({1, 2, 2, 5, 5});
        rng.fill_uniform(vol, -1, 1);
        auto off = interior_flow(rng, 5, 5);
        Tensor<double> coords({1, 3, 2, 5, 5});
        auto grid = make_identity_grid_3d<double>(5, 5);
        for (int64_t i = 0; i < grid.numel(); ++i) coords[i] = grid[i];
        const int64_t hw = 25;
        for (int64_t d = 0; d < 2; ++d)
            for (int64_t p = 0; p < hw; ++p) {
                coords[(0 * 2 + d) * hw + p] += off[p];
                coords[(1 * 2 + d) * hw + p] += off[hw + p];
                coords[(2 * 2 + d) * hw + p] = rng.uniform(-0.6, 0.6);
            }
        auto fn = [](const std::vector<Var<double>>& in) {
            return sum(grid_sample_3d_op(in[0], in[1], Padding::Border));
        };
        auto rep3 = finite_diff_check<double>(fn, {vol, coords}, 1e-5);
        CHECK(rep3.worst < 1e-4);
    }
}

TEST_CASE("conv2d gradients") {
    Rng rng(5);
    Tensor<double> x({2, 3, 5, 4});
    Tensor<double> w({4, 3, 3, 3});
    Tensor<double> b({4});
    rng.fill_uniform(x, -1, 1);
    rng.fill_uniform(w, -0.5, 0.5);
    rng.fill_uniform(b, -0.5, 0.5);
    auto fn = [](const std::vector<Var<double>>& in) {
        return mean(conv2d(in[0], in[1], in[2], 1, 1));
    };
    CHECK(finite_diff_check<double>(fn, {x, w, b}, 1e-6).worst < 1e-6);
    auto fn2 = [](const std::vector<Var<double>>& in) {
        return mean(conv2d(in[0], in[1], in[2], 2, 1));
    };
    CHECK(finite_diff_check<double>(fn2, {x, w, b}, 1e-6).worst < 1e-6);
}

TEST_CASE("conv3d gradients") {
    Rng rng(6);
    Tensor<double> x({1, 2, 2, 4, 4});
    Tensor<double> w({3, 2, 3, 3, 3});
    Tensor<double> b({3});
    rng.fill_uniform(x, -1, 1);
    rng.fill_uniform(w, -0.5, 0.5);
    rng.fill_uniform(b, -0.5, 0.5);
    auto fn = [](const std::vector<Var<double>>& in) {
        return mean(conv3d(in[0], in[1], in[2]));
    };
    CHECK(finite_diff_check<double>(fn, {x, w, b}, 1e-6).worst < 1e-6);
}

TEST_CASE("instance_norm gradients") {
    Rng rng(7);
    Tensor<double> x({2, 3, 4, 4});
    Tensor<double> g({3});
    Tensor<double> b({3});
    rng.fill_uniform(x, -1, 1);
    rng.fill_uniform(g, 0.5, 1.5);
    rng.fill_uniform(b, -0.5, 0.5);
    auto fn = [](const std::vector<Var<double>>& in) {
        return mean(mul(instance_norm(in[0], in[1], in[2]), in[0]));
    };
    CHECK(finite_diff_check<double>(fn, {x, g, b}, 1e-6).worst < 1e-5);
}

TEST_CASE("activation and softmax gradients") {
    Rng rng(8);
    Tensor<double> x({2, 4, 3, 3});
    rng.fill_uniform(x, -2, 2);
    auto fn_l = [](const std::vector<Var<double>>& in) {
        return mean(square(leaky_relu(in[0], 0.2)));
    };
    CHECK(finite_diff_check<double>(fn_l, {x}, 1e-6).worst < 1e-5);
    auto fn_t = [](const std::vector<Var<double>>& in) { return mean(square(tanh_op(in[0]))); };
    CHECK(finite_diff_check<double>(fn_t, {x}, 1e-6).worst < 1e-6);
    auto fn_s = [](const std::vector<Var<double>>& in) { return mean(square(sigmoid(in[0]))); };
    CHECK(finite_diff_check<double>(fn_s, {x}, 1e-6).worst < 1e-6);
    auto fn_sm = [](const std::vector<Var<double>>& in) {
        return mean(square(softmax_channels(in[0])));
    };
    CHECK(finite_diff_check<double>(fn_sm, {x}, 1e-6).worst < 1e-6);
}

TEST_CASE("upsample, pool, stack, slice, concat gradients") {
    Rng rng(9);
    Tensor<double> x({1, 2, 3, 4});
    rng.fill_uniform(x, -1, 1);
    auto fn_u = [](const std::vector<Var<double>>& in) {
        return mean(square(upsample_bilinear(in[0], 2)));
    };
    CHECK(finite_diff_check<double>(fn_u, {x}, 1e-6).worst < 1e-6);

    Tensor<double> y({1, 2, 4, 4});
    rng.fill_uniform(y, -1, 1);
    auto fn_p = [](const std::vector<Var<double>>& in) {
        return mean(square(avg_pool(in[0], 2)));
    };
    CHECK(finite_diff_check<double>(fn_p, {y}, 1e-6).worst < 1e-6);

    auto fn_z = [](const std::vector<Var<double>>& in) {
        return mean(square(take_depth(stack_zero_depth_op(in[0]), 0)));
    };
    CHECK(finite_diff_check<double>(fn_z, {x}, 1e-6).worst < 1e-6);

    Tensor<double> a({1, 2, 3, 3}), b({1, 3, 3, 3});
    rng.fill_uniform(a, -1, 1);
    rng.fill_uniform(b, -1, 1);
    auto fn_c = [](const std::vector<Var<double>>& in) {
        auto cat = concat_channels<double>({in[0], in[1]});
        return mean(square(slice_channels(cat, 1, 4)));
    };
    CHECK(finite_diff_check<double>(fn_c, {a, b}, 1e-6).worst < 1e-6);
}

TEST_CASE("two backward passes with zero_grads between") {
    Rng rng(10);
    Tensor<double> x({2, 2});
    rng.fill_uniform(x, -1, 1);
    auto v = make_var(x, true);
    auto l1 = sum(square(v));
    auto l2 = sum(v);
    backward(l1);
    Tensor<double> g1 = v->grad;
    zero_grads(l1);
    zero_grads(l2);
    backward(l2);
    for (int64_t i = 0; i < x.numel(); ++i) {
        CHECK(g1[i] == doctest::Approx(2.0 * x[i]));
        CHECK(v->grad[i] == 1.0);
    }
}

TEST_CASE("batched conv forward/backward bitwise deterministic") {
    Rng rng(11);
    Tensor<float> x({4, 3, 16, 12});
    Tensor<float> w({5, 3, 3, 3});
    Tensor<float> b({5});
    rng.fill_uniform(x, -1, 1);
    rng.fill_uniform(w, -1, 1);
    rng.fill_uniform(b, -1, 1);
    auto run = [&]() {
        auto vx = make_var(x, true);
        auto vw = make_var(w, true);
        auto vb = make_var(b, true);
        auto out = conv2d(vx, vw, vb, 1, 1);
        auto loss = mean(square(out));
        backward(loss);
        return std::make_pair(out->value, vw->grad);
    };
    auto [o1, g1] = run();
    auto [o2, g2] = run();
    CHECK(bitwise_equal(o1, o2));
    CHECK(bitwise_equal(g1, g2));
}
