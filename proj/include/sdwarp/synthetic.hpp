#pragma once

#include <cstdint>
#include <string>

#include "sdwarp/tensor.hpp"

namespace sdwarp {

// Semantic label set (6 labels).
enum Label : int32_t {
    kBackground = 0,
    kSkin = 1,
    kArms = 2,
    kTorso = 3,
    kUpperClothes = 4,
    kLowerClothes = 5,
};
inline constexpr int kNumLabels = 6;

enum class ScenarioKind { LongSleeve, TuckedIn, ShortSleeve, TuckedOut };
enum class TextureKind { Checkerboard, Stripes, LogoPatch };

std::string scenario_name(ScenarioKind k);
ScenarioKind scenario_from_name(const std::string& name);
std::string texture_name(TextureKind k);
TextureKind texture_from_name(const std::string& name);

// Relative geometry; generate_pair resolves it to pixels per (seed,
// resolution) with seeded jitter.
struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::LongSleeve;
    TextureKind texture = TextureKind::Checkerboard;
    int texture_period = 6;  // pixels, vertical period in the flat garment

    double torso_width_frac = 0.30;
    double shoulder_y_frac = 0.18;
    double waist_y_frac = 0.47;
    double hip_y_frac = 0.62;
    double arm_len_frac = 0.33;
    double arm_width_frac = 0.07;
    int min_gap_px = 2;  // sleeve-torso background gap guarantee (long_sleeve)

    static ScenarioSpec standard(ScenarioKind k);
};

// Pixel-level facts of one generated sample that diagnostics rely on.
struct SampleGeometry {
    int shoulder_y = 0;
    int waist_y = 0;
    int hip_y = 0;
    int crop_y = 0;        // garment bottom row on the person (exclusive)
    int flat_period = 0;   // vertical texture period of the flat garment
    double arm_angle_deg = 0;
};

struct Sample {
    Tensor<float> person;             // I   [3,H,W] in [-1,1]
    Tensor<float> clothes;            // c   [3,H,W], background exactly 0
    Tensor<float> clothes_mask;       // c_m [1,H,W] {0,1}
    Tensor<int32_t> seg;              // S   [H,W]
    Tensor<float> pose;               // P   [3,H,W]
    Tensor<int32_t> agnostic_seg;     // S_a [H,W]
    Tensor<float> agnostic;           // I_a [3,H,W]
    Tensor<float> gt_warped;          // I_c [3,H,W]
    Tensor<float> gt_clothes_region;  // S_c [1,H,W] {0,1}
    Tensor<float> torso_mask;         // P_torso [1,H,W] {0,1}
    Tensor<float> nonroi_mask;        // M [1,H,W] {0,1}
    ScenarioKind scenario = ScenarioKind::LongSleeve;
    TextureKind texture = TextureKind::Checkerboard;
    uint64_t seed = 0;
    SampleGeometry geom;

    int64_t height() const { return seg.dim(0); }
    int64_t width() const { return seg.dim(1); }
};

// Eq.-style non-ROI mask: M = P_torso * (1 - S_c), exact. Inputs must be
// binary and same shape.
Tensor<float> compute_nonroi_mask(const Tensor<float>& torso_mask,
                                  const Tensor<float>& clothes_region);

// Procedural paired sample. H and W must be divisible by 16.
Sample generate_pair(const ScenarioSpec& spec, uint64_t seed, int64_t H, int64_t W);

}  // namespace sdwarp
