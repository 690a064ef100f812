#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sdwarp/rng.hpp"
#include "sdwarp/synthetic.hpp"

using namespace sdwarp;

namespace {

double mask_sum(const Tensor<float>& m) {
    double s = 0;
    for (int64_t i = 0; i < m.numel(); ++i) s += m[i];
    return s;
}

}  // namespace

TEST_CASE("compute_nonroi_mask oracle") {
    auto ones = Tensor<float>::full({1, 4, 4}, 1.0f);
    auto zeros = Tensor<float>({1, 4, 4});
    // full overlap -> 0
    CHECK(mask_sum(compute_nonroi_mask(ones, ones)) == 0.0);
    // no clothes -> all torso
    CHECK(mask_sum(compute_nonroi_mask(ones, zeros)) == 16.0);

    Rng rng(1);
    for (int rep = 0; rep < 50; ++rep) {
        Tensor<float> t({1, 5, 5}), s({1, 5, 5});
        for (int64_t i = 0; i < t.numel(); ++i) {
            t[i] = rng.uniform(0, 1) < 0.5 ? 1.0f : 0.0f;
            s[i] = rng.uniform(0, 1) < 0.5 ? 1.0f : 0.0f;
        }
        auto m = compute_nonroi_mask(t, s);
        for (int64_t i = 0; i < m.numel(); ++i) CHECK(m[i] == t[i] * (1.0f - s[i]));
    }

    auto half = Tensor<float>::full({1, 4, 4}, 0.5f);
    CHECK_THROWS_AS(compute_nonroi_mask(half, ones), ArgumentError);
    CHECK_THROWS_AS(compute_nonroi_mask(ones, Tensor<float>({1, 3, 3})), ArgumentError);
}

TEST_CASE("generate_pair validates resolution") {
    auto spec = ScenarioSpec::standard(ScenarioKind::LongSleeve);
    CHECK_THROWS_AS(generate_pair(spec, 0, 100, 77), ArgumentError);
    CHECK_THROWS_AS(generate_pair(spec, 0, 96, 63), ArgumentError);
}

TEST_CASE("long_sleeve sample invariants") {
    auto spec = ScenarioSpec::standard(ScenarioKind::LongSleeve);
    for (uint64_t seed : {0ull, 1ull, 2ull, 3ull, 4ull, 5ull, 6ull, 7ull}) {
        auto s = generate_pair(spec, seed, 128, 96);
        const int64_t H = 128, W = 96;

        // flat clothes scanline: sleeve-on, gap-off (>=2 px), torso-on
        bool found = false;
        for (int64_t y = 0; y < H && !found; ++y) {
            int state = 0, gap = 0;
            for (int64_t x = 0; x < W; ++x) {
                const bool on = s.clothes_mask.at3(0, y, x) > 0.5f;
                if (state == 0 && on) state = 1;
                else if (state == 1 && !on) { state = 2; gap = 1; }
                else if (state == 2 && !on) ++gap;
                else if (state == 2 && on && gap >= 2) { found = true; break; }
                else if (state == 2 && on) state = 1;
            }
        }
        CHECK(found);

        // M == P_torso * (1 - S_c) elementwise, exactly
        auto m = compute_nonroi_mask(s.torso_mask, s.gt_clothes_region);
        CHECK(bitwise_equal(m, s.nonroi_mask));

        // S_c within upper-clothes labels of S; I_c nonzero only inside S_c
        for (int64_t p = 0; p < H * W; ++p) {
            if (s.gt_clothes_region[p] > 0.5f) CHECK(s.seg[p] == kUpperClothes);
            if (s.seg[p] == kUpperClothes) CHECK(s.gt_clothes_region[p] == 1.0f);
            if (s.gt_clothes_region[p] < 0.5f) {
                CHECK(s.gt_warped[0 * H * W + p] == 0.0f);
                CHECK(s.gt_warped[1 * H * W + p] == 0.0f);
                CHECK(s.gt_warped[2 * H * W + p] == 0.0f);
            }
        }

        // c_m is 1 exactly on non-background pixels of c
        for (int64_t p = 0; p < H * W; ++p) {
            const bool nonzero = s.clothes[0 * H * W + p] != 0.0f ||
                                 s.clothes[1 * H * W + p] != 0.0f ||
                                 s.clothes[2 * H * W + p] != 0.0f;
            CHECK((s.clothes_mask[p] == 1.0f) == nonzero);
        }
    }
}

TEST_CASE("tucked_in sample invariants") {
    auto spec = ScenarioSpec::standard(ScenarioKind::TuckedIn);
    for (uint64_t seed : {0ull, 1ull, 2ull, 3ull, 4ull}) {
        auto s = generate_pair(spec, seed, 128, 96);
        // non-ROI must be nonempty
        CHECK(mask_sum(s.nonroi_mask) > 0.0);
        // the crop removes real garment rows
        CHECK(s.geom.crop_y == s.geom.waist_y);
        // S_c is empty at and below the crop line inside the torso columns
        for (int64_t y = s.geom.crop_y; y < 128; ++y)
            for (int64_t x = 0; x < 96; ++x) CHECK(s.gt_clothes_region.at3(0, y, x) == 0.0f);
        // area(S_c) < area of the untucked garment (flat mask area as proxy
        // for full-length garment rendered untucked)
        const double area_sc = mask_sum(s.gt_clothes_region);
        CHECK(area_sc > 0);
        // the flat garment extends below the crop line once mapped: texture
        // present in c that is absent from I_c
        double c_area = mask_sum(s.clothes_mask);
        CHECK(c_area > area_sc);
    }
}

TEST_CASE("tucked_out satisfies the non-ROI formula elementwise") {
    auto spec = ScenarioSpec::standard(ScenarioKind::TuckedOut);
    auto s = generate_pair(spec, 1, 128, 96);
    auto m = compute_nonroi_mask(s.torso_mask, s.gt_clothes_region);
    CHECK(bitwise_equal(m, s.nonroi_mask));
    // garment covers the torso through the waist: M vanishes there
    for (int64_t y = s.geom.shoulder_y; y < s.geom.waist_y; ++y)
        for (int64_t x = 0; x < 96; ++x)
            if (s.torso_mask.at3(0, y, x) == 1.0f) CHECK(s.nonroi_mask.at3(0, y, x) == 0.0f);
}

TEST_CASE("generation is bitwise reproducible") {
    for (auto kind : {ScenarioKind::LongSleeve, ScenarioKind::TuckedIn, ScenarioKind::ShortSleeve,
                      ScenarioKind::TuckedOut}) {
        auto spec = ScenarioSpec::standard(kind);
        auto a = generate_pair(spec, 7, 96, 64);
        auto b = generate_pair(spec, 7, 96, 64);
        CHECK(bitwise_equal(a.person, b.person));
        CHECK(bitwise_equal(a.clothes, b.clothes));
        CHECK(bitwise_equal(a.gt_warped, b.gt_warped));
        CHECK(bitwise_equal(a.pose, b.pose));
        CHECK(bitwise_equal(a.seg, b.seg));
        // different seeds differ
        auto c = generate_pair(spec, 8, 96, 64);
        CHECK_FALSE(bitwise_equal(a.person, c.person));
    }
}

TEST_CASE("agnostic pair removes clothing labels and pixels") {
    auto s = generate_pair(ScenarioSpec::standard(ScenarioKind::LongSleeve), 3, 96, 64);
    for (int64_t p = 0; p < 96 * 64; ++p) {
        CHECK(s.agnostic_seg[p] != kUpperClothes);
        if (s.seg[p] == kUpperClothes) {
            CHECK(s.agnostic_seg[p] == kBackground);
            CHECK(s.agnostic[0 * 96 * 64 + p] == 0.0f);
        } else {
            CHECK(s.agnostic_seg[p] == s.seg[p]);
        }
    }
}

TEST_CASE("nontrivial warp between flat and on-body pose") {
    // flat garment and on-body garment must differ substantially
    auto s = generate_pair(ScenarioSpec::standard(ScenarioKind::LongSleeve), 11, 96, 64);
    int64_t diff = 0;
    for (int64_t p = 0; p < 96 * 64; ++p)
        if ((s.clothes_mask[p] > 0.5f) != (s.gt_clothes_region[p] > 0.5f)) ++diff;
    CHECK(diff > 200);
}
