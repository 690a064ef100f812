#include "sdwarp/synthetic.hpp"

#include <array>
#include <cmath>

#include "sdwarp/rng.hpp"

namespace sdwarp {

std::string scenario_name(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::LongSleeve: return "long_sleeve";
        case ScenarioKind::TuckedIn: return "tucked_in";
        case ScenarioKind::ShortSleeve: return "short_sleeve";
        case ScenarioKind::TuckedOut: return "tucked_out";
    }
    throw ArgumentError("unknown scenario kind");
}

ScenarioKind scenario_from_name(const std::string& name) {
    if (name == "long_sleeve") return ScenarioKind::LongSleeve;
    if (name == "tucked_in") return ScenarioKind::TuckedIn;
    if (name == "short_sleeve") return ScenarioKind::ShortSleeve;
    if (name == "tucked_out") return ScenarioKind::TuckedOut;
    throw ArgumentError("unknown scenario name: " + name);
}

std::string texture_name(TextureKind k) {
    switch (k) {
        case TextureKind::Checkerboard: return "checkerboard";
        case TextureKind::Stripes: return "stripes";
        case TextureKind::LogoPatch: return "logo_patch";
    }
    throw ArgumentError("unknown texture kind");
}

TextureKind texture_from_name(const std::string& name) {
    if (name == "checkerboard") return TextureKind::Checkerboard;
    if (name == "stripes") return TextureKind::Stripes;
    if (name == "logo_patch") return TextureKind::LogoPatch;
    throw ArgumentError("unknown texture name: " + name);
}

ScenarioSpec ScenarioSpec::standard(ScenarioKind k) {
    ScenarioSpec s;
    s.kind = k;
    return s;
}

Tensor<float> compute_nonroi_mask(const Tensor<float>& torso_mask,
                                  const Tensor<float>& clothes_region) {
    if (!torso_mask.same_shape(clothes_region))
        throw ArgumentError("compute_nonroi_mask: shape mismatch");
    for (int64_t i = 0; i < torso_mask.numel(); ++i) {
        if (!(torso_mask[i] == 0.0f || torso_mask[i] == 1.0f) ||
            !(clothes_region[i] == 0.0f || clothes_region[i] == 1.0f))
            throw ArgumentError("compute_nonroi_mask: inputs must be binary");
    }
    Tensor<float> m(torso_mask.shape());
    for (int64_t i = 0; i < m.numel(); ++i) m[i] = torso_mask[i] * (1.0f - clothes_region[i]);
    return m;
}

namespace {

struct Vec2 {
    double x = 0, y = 0;
};

// Capsule (thick segment) from a, direction d (unit), length len, radius r.
struct Capsule {
    Vec2 a;
    Vec2 dir;
    double len = 0, radius = 0;

    bool contains(double px, double py) const {
        const double rx = px - a.x, ry = py - a.y;
        double t = rx * dir.x + ry * dir.y;
        t = std::clamp(t, 0.0, len);
        const double cx = a.x + dir.x * t, cy = a.y + dir.y * t;
        const double dx = px - cx, dy = py - cy;
        return dx * dx + dy * dy <= radius * radius;
    }

    // Axis/perpendicular coordinates of a point in the capsule frame.
    void frame(double px, double py, double& t, double& u) const {
        const double rx = px - a.x, ry = py - a.y;
        t = rx * dir.x + ry * dir.y;
        u = rx * (-dir.y) + ry * dir.x;
    }
};

struct Rect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // half-open
    bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

struct BodyGeom {
    int cx, tw, shoulder_y, waist_y, hip_y, legs_end, pants_halfw;
    int head_cx, head_cy, head_r;
    double arm_angle;  // radians from vertical
    double arm_len, arm_w;
    Capsule arm_l, arm_r;
    Rect torso;
};

struct GarmentGeom {
    Rect panel;              // flat torso panel
    double sleeve_angle;     // radians from vertical
    double sleeve_len, sleeve_w;
    Capsule sleeve_l, sleeve_r;  // flat sleeves
    // On-body garment placement
    int body_x0, body_x1;    // garment torso columns on the body
    int body_y0;             // garment top row (shoulder)
    double y_scale;          // flat panel rows -> body rows
    int hem_y;               // untucked garment bottom row on the body (exclusive)
    int crop_y;              // visible bottom (== hem unless tucked in)
    double sleeve_cover;     // fraction of the arm covered by the sleeve
};

struct Colors {
    std::array<float, 3> tex_a, tex_b, pants, skin, torso_skin;
};

float pick_channel(Rng& rng) {
    const double mag = rng.uniform(0.25, 0.9);
    return static_cast<float>(rng.uniform(0, 1) < 0.5 ? -mag : mag);
}

Colors make_colors(Rng& rng) {
    Colors c;
    for (int k = 0; k < 3; ++k) {
        c.tex_a[static_cast<size_t>(k)] = pick_channel(rng);
        c.tex_b[static_cast<size_t>(k)] = pick_channel(rng);
    }
    // Keep the two texture tones apart so periods stay measurable.
    double dist = 0;
    for (int k = 0; k < 3; ++k)
        dist = std::max(dist, std::abs(static_cast<double>(c.tex_a[static_cast<size_t>(k)]) -
                                       static_cast<double>(c.tex_b[static_cast<size_t>(k)])));
    if (dist < 0.7) {
        c.tex_b[0] = c.tex_a[0] > 0 ? c.tex_a[0] - 0.9f : c.tex_a[0] + 0.9f;
        c.tex_b[0] = std::clamp(c.tex_b[0], -0.9f, 0.9f);
        if (std::abs(c.tex_b[0] - c.tex_a[0]) < 0.7f) c.tex_b[0] = c.tex_a[0] > 0 ? -0.8f : 0.8f;
    }
    c.pants = {-0.35f, -0.2f, static_cast<float>(rng.uniform(0.35, 0.7))};
    c.skin = {0.55f, 0.18f, -0.1f};
    c.torso_skin = {0.5f, 0.12f, -0.15f};
    return c;
}

// Texture value at flat-garment coordinates, anchored at the panel origin.
std::array<float, 3> texture_at(const GarmentGeom& g, TextureKind kind, int period,
                                const Colors& col, double fx, double fy) {
    const double u = fx - g.panel.x0;
    const double v = fy - g.panel.y0;
    auto cell = [](double a, int p) { return static_cast<int64_t>(std::floor(a / p)); };
    switch (kind) {
        case TextureKind::Checkerboard: {
            const bool on = ((cell(u, period) + cell(v, period)) & 1) != 0;
            return on ? col.tex_a : col.tex_b;
        }
        case TextureKind::Stripes: {
            const bool on = (cell(v, period) & 1) != 0;
            return on ? col.tex_a : col.tex_b;
        }
        case TextureKind::LogoPatch: {
            const bool stripe = (cell(v, period) & 1) != 0;
            std::array<float, 3> base = stripe ? col.tex_a : col.tex_b;
            const double pw = (g.panel.x1 - g.panel.x0) * 0.4;
            const double ph = (g.panel.y1 - g.panel.y0) * 0.22;
            const double px0 = (g.panel.x0 + g.panel.x1) * 0.5 - pw * 0.5 - g.panel.x0;
            const double py0 = (g.panel.y1 - g.panel.y0) * 0.3;
            if (u >= px0 && u < px0 + pw && v >= py0 && v < py0 + ph)
                return {col.tex_b[0], col.tex_a[1], col.tex_b[2]};
            return base;
        }
    }
    return col.tex_a;
}

BodyGeom make_body(const ScenarioSpec& spec, Rng& rng, int64_t H, int64_t W) {
    BodyGeom b;
    b.cx = static_cast<int>(W / 2) + rng.uniform_int(-2, 2);
    b.tw = std::max(10, static_cast<int>(std::lround(spec.torso_width_frac * W * rng.uniform(0.92, 1.08))));
    b.shoulder_y = static_cast<int>(std::lround(spec.shoulder_y_frac * H * rng.uniform(0.95, 1.05)));
    b.waist_y = static_cast<int>(std::lround(spec.waist_y_frac * H * rng.uniform(0.97, 1.03)));
    b.hip_y = static_cast<int>(std::lround(spec.hip_y_frac * H));
    b.legs_end = std::min<int>(static_cast<int>(H) - 2, b.hip_y + static_cast<int>(0.28 * H));
    b.pants_halfw = b.tw / 2 + 2;
    b.head_r = std::max(3, static_cast<int>(0.055 * H));
    b.head_cx = b.cx;
    b.head_cy = b.shoulder_y - b.head_r - 2;

    double angle_deg = 0;
    switch (spec.kind) {
        case ScenarioKind::LongSleeve: angle_deg = rng.uniform(22, 32); break;
        case ScenarioKind::TuckedIn: angle_deg = rng.uniform(4, 9); break;
        case ScenarioKind::ShortSleeve: angle_deg = rng.uniform(14, 24); break;
        case ScenarioKind::TuckedOut: angle_deg = rng.uniform(12, 22); break;
    }
    b.arm_angle = angle_deg * M_PI / 180.0;
    b.arm_len = spec.arm_len_frac * H * rng.uniform(0.95, 1.05);
    b.arm_w = std::max(3.0, spec.arm_width_frac * W);

    const double s = std::sin(b.arm_angle), c = std::cos(b.arm_angle);
    b.arm_l.a = {static_cast<double>(b.cx - b.tw / 2) - b.arm_w * 0.5,
                 static_cast<double>(b.shoulder_y) + b.arm_w * 0.5};
    b.arm_l.dir = {-s, c};
    b.arm_l.len = b.arm_len;
    b.arm_l.radius = b.arm_w * 0.5;
    b.arm_r.a = {static_cast<double>(b.cx + b.tw / 2) + b.arm_w * 0.5,
                 static_cast<double>(b.shoulder_y) + b.arm_w * 0.5};
    b.arm_r.dir = {s, c};
    b.arm_r.len = b.arm_len;
    b.arm_r.radius = b.arm_w * 0.5;

    b.torso = Rect{b.cx - b.tw / 2, b.shoulder_y, b.cx + b.tw - b.tw / 2, b.hip_y};
    return b;
}

GarmentGeom make_garment(const ScenarioSpec& spec, Rng& rng, const BodyGeom& body, int64_t H,
                         int64_t W) {
    GarmentGeom g;
    const int gw = body.tw + 2;
    const int gx0 = static_cast<int>(W / 2) - gw / 2;
    const int gy0 = std::max(3, static_cast<int>(0.14 * H));

    // Untucked on-body length; tucked-in garments are generated long so that
    // the crop removes real content.
    double body_len_frac;
    switch (spec.kind) {
        case ScenarioKind::LongSleeve:
        case ScenarioKind::TuckedOut: body_len_frac = 1.0; break;  // to the hip
        case ScenarioKind::ShortSleeve: body_len_frac = 0.92; break;
        case ScenarioKind::TuckedIn: body_len_frac = rng.uniform(0.72, 0.82); break;
    }
    const int body_len = static_cast<int>(std::lround((body.hip_y - body.shoulder_y) *
                                                      (spec.kind == ScenarioKind::TuckedIn
                                                           ? 1.0
                                                           : body_len_frac)));
    // For tucked-in, hem lands between waist and hip: content below the waist
    // crop line exists and is hidden.
    int hem = body.shoulder_y + body_len;
    if (spec.kind == ScenarioKind::TuckedIn)
        hem = body.waist_y + std::max(4, (body.hip_y - body.waist_y) * 3 / 4);

    g.y_scale = rng.uniform(0.95, 1.05);
    const int panel_len = static_cast<int>(std::lround((hem - body.shoulder_y) / g.y_scale));
    g.panel = Rect{gx0, gy0, gx0 + gw, gy0 + panel_len};
    g.body_x0 = body.cx - gw / 2;
    g.body_x1 = body.cx + gw - gw / 2;
    g.body_y0 = body.shoulder_y;
    g.hem_y = hem;
    g.crop_y = spec.kind == ScenarioKind::TuckedIn ? body.waist_y : hem;

    switch (spec.kind) {
        case ScenarioKind::LongSleeve:
        case ScenarioKind::TuckedOut: g.sleeve_cover = 0.95; break;
        case ScenarioKind::ShortSleeve: g.sleeve_cover = 0.45; break;
        case ScenarioKind::TuckedIn: g.sleeve_cover = 0.4; break;
    }
    g.sleeve_angle = rng.uniform(48, 60) * M_PI / 180.0;
    g.sleeve_len = body.arm_len * g.sleeve_cover * rng.uniform(0.9, 1.0);
    g.sleeve_w = body.arm_w + 2.0;

    const double s = std::sin(g.sleeve_angle), c = std::cos(g.sleeve_angle);
    g.sleeve_l.a = {static_cast<double>(g.panel.x0), static_cast<double>(gy0) + g.sleeve_w * 0.5};
    g.sleeve_l.dir = {-s, c};
    g.sleeve_l.len = g.sleeve_len;
    g.sleeve_l.radius = g.sleeve_w * 0.5;
    g.sleeve_r.a = {static_cast<double>(g.panel.x1 - 1),
                    static_cast<double>(gy0) + g.sleeve_w * 0.5};
    g.sleeve_r.dir = {s, c};
    g.sleeve_r.len = g.sleeve_len;
    g.sleeve_r.radius = g.sleeve_w * 0.5;
    return g;
}

}  // namespace

Sample generate_pair(const ScenarioSpec& spec, uint64_t seed, int64_t H, int64_t W) {
    if (H < 48 || W < 32) throw ArgumentError("generate_pair: resolution too small");
    if (H % 16 != 0 || W % 16 != 0)
        throw ArgumentError("generate_pair: resolution must be divisible by 16 (five pyramid levels)");

    Rng rng(Rng::derive(seed, static_cast<uint64_t>(spec.kind) * 131 + 7));
    const Colors colors = make_colors(rng);
    const BodyGeom body = make_body(spec, rng, H, W);
    const GarmentGeom garment = make_garment(spec, rng, body, H, W);

    Sample smp;
    smp.scenario = spec.kind;
    smp.texture = spec.texture;
    smp.seed = seed;
    smp.geom.shoulder_y = body.shoulder_y;
    smp.geom.waist_y = body.waist_y;
    smp.geom.hip_y = body.hip_y;
    smp.geom.crop_y = garment.crop_y;
    smp.geom.flat_period = spec.texture_period;
    smp.geom.arm_angle_deg = body.arm_angle * 180.0 / M_PI;

    smp.person = Tensor<float>({3, H, W});
    smp.clothes = Tensor<float>({3, H, W});
    smp.clothes_mask = Tensor<float>({1, H, W});
    smp.seg = Tensor<int32_t>({H, W});
    smp.pose = Tensor<float>({3, H, W});
    smp.agnostic_seg = Tensor<int32_t>({H, W});
    smp.agnostic = Tensor<float>({3, H, W});
    smp.gt_warped = Tensor<float>({3, H, W});
    smp.gt_clothes_region = Tensor<float>({1, H, W});
    smp.torso_mask = Tensor<float>({1, H, W});

    // ---- flat clothes image + mask -------------------------------------
    auto put3 = [&](Tensor<float>& t, int64_t y, int64_t x, const std::array<float, 3>& v) {
        t.at3(0, y, x) = v[0];
        t.at3(1, y, x) = v[1];
        t.at3(2, y, x) = v[2];
    };
    for (int64_t y = 0; y < H; ++y)
        for (int64_t x = 0; x < W; ++x) {
            const double px = x + 0.5, py = y + 0.5;
            const bool in_panel = garment.panel.contains(static_cast<int>(x), static_cast<int>(y));
            const bool in_sl = garment.sleeve_l.contains(px, py);
            const bool in_sr = garment.sleeve_r.contains(px, py);
            if (in_panel || in_sl || in_sr) {
                smp.clothes_mask.at3(0, y, x) = 1.0f;
                put3(smp.clothes, y, x,
                     texture_at(garment, spec.texture, spec.texture_period, colors, px, py));
            }
        }

    // ---- body part masks -------------------------------------------------
    auto in_head = [&](int64_t x, int64_t y) {
        const double dx = x + 0.5 - body.head_cx, dy = y + 0.5 - body.head_cy;
        return dx * dx + dy * dy <= static_cast<double>(body.head_r) * body.head_r;
    };
    auto in_pants = [&](int64_t x, int64_t y) {
        return y >= body.waist_y && y < body.legs_end && std::abs(static_cast<int>(x) - body.cx) <= body.pants_halfw;
    };

    // ---- on-body garment (S_c) and its texture (I_c) ---------------------
    // Sleeves win over the torso panel where they overlap; each part carries
    // an affine inverse map into the flat garment.
    const double sx_scale =
        static_cast<double>(garment.panel.x1 - garment.panel.x0) /
        static_cast<double>(garment.body_x1 - garment.body_x0);
    const double arm_ratio_t =
        garment.sleeve_len / std::max(1.0, body.arm_len * garment.sleeve_cover);
    const double arm_ratio_u = garment.sleeve_w / (body.arm_w + 2.0);

    Tensor<float>& sc = smp.gt_clothes_region;
    for (int64_t y = 0; y < H; ++y) {
        for (int64_t x = 0; x < W; ++x) {
            const double px = x + 0.5, py = y + 0.5;
            double t, u;
            bool on = false;
            double fx = 0, fy = 0;
            // left sleeve region on the body
            if (body.arm_l.contains(px, py)) {
                body.arm_l.frame(px, py, t, u);
                if (t <= body.arm_len * garment.sleeve_cover + 1.0) {
                    const double ft = t * arm_ratio_t, fu = u * arm_ratio_u;
                    fx = garment.sleeve_l.a.x + garment.sleeve_l.dir.x * ft -
                         garment.sleeve_l.dir.y * fu;
                    fy = garment.sleeve_l.a.y + garment.sleeve_l.dir.y * ft +
                         garment.sleeve_l.dir.x * fu;
                    on = true;
                }
            }
            if (!on && body.arm_r.contains(px, py)) {
                body.arm_r.frame(px, py, t, u);
                if (t <= body.arm_len * garment.sleeve_cover + 1.0) {
                    const double ft = t * arm_ratio_t, fu = u * arm_ratio_u;
                    fx = garment.sleeve_r.a.x + garment.sleeve_r.dir.x * ft -
                         garment.sleeve_r.dir.y * fu;
                    fy = garment.sleeve_r.a.y + garment.sleeve_r.dir.y * ft +
                         garment.sleeve_r.dir.x * fu;
                    on = true;
                }
            }
            if (!on && x >= garment.body_x0 && x < garment.body_x1 && y >= garment.body_y0 &&
                y < garment.hem_y) {
                fx = garment.panel.x0 + (px - garment.body_x0) * sx_scale;
                fy = garment.panel.y0 + (py - garment.body_y0) / garment.y_scale;
                on = true;
            }
            if (on && y < garment.crop_y) {
                sc.at3(0, y, x) = 1.0f;
                put3(smp.gt_warped, y, x,
                     texture_at(garment, spec.texture, spec.texture_period, colors, fx, fy));
            }
        }
    }

    // ---- segmentation of the dressed person ------------------------------
    for (int64_t y = 0; y < H; ++y)
        for (int64_t x = 0; x < W; ++x) {
            int32_t lab = kBackground;
            if (in_pants(x, y)) lab = kLowerClothes;
            if (body.torso.contains(static_cast<int>(x), static_cast<int>(y)) && y < body.waist_y)
                lab = kTorso;
            const double px = x + 0.5, py = y + 0.5;
            if (body.arm_l.contains(px, py) || body.arm_r.contains(px, py)) lab = kArms;
            if (in_head(x, y)) lab = kSkin;
            if (sc.at3(0, y, x) > 0.5f) lab = kUpperClothes;
            smp.seg.at2(y, x) = lab;
        }

    // ---- torso body mask (pose-derived, clothing independent) ------------
    for (int64_t y = body.torso.y0; y < body.torso.y1; ++y)
        for (int64_t x = body.torso.x0; x < body.torso.x1; ++x)
            if (x >= 0 && x < W && y >= 0 && y < H) smp.torso_mask.at3(0, y, x) = 1.0f;

    smp.nonroi_mask = compute_nonroi_mask(smp.torso_mask, smp.gt_clothes_region);

    // ---- pose map: unique tone per part with a vertical gradient ---------
    auto paint_pose = [&](int64_t x, int64_t y, const std::array<float, 3>& base, double span_y0,
                          double span_y1) {
        const double span = std::max(1.0, span_y1 - span_y0);
        const float shade = static_cast<float>(0.55 + 0.45 * ((y + 0.5) - span_y0) / span);
        smp.pose.at3(0, y, x) = base[0] * shade;
        smp.pose.at3(1, y, x) = base[1] * shade;
        smp.pose.at3(2, y, x) = base[2] * shade;
    };
    const std::array<float, 3> tone_head{0.9f, 0.15f, 0.15f};
    const std::array<float, 3> tone_torso{0.15f, 0.9f, 0.15f};
    const std::array<float, 3> tone_arm_l{0.15f, 0.15f, 0.9f};
    const std::array<float, 3> tone_arm_r{0.9f, 0.9f, 0.15f};
    const std::array<float, 3> tone_legs{0.6f, 0.15f, 0.9f};
    for (int64_t y = 0; y < H; ++y)
        for (int64_t x = 0; x < W; ++x) {
            const double px = x + 0.5, py = y + 0.5;
            if (in_pants(x, y) || (y >= body.hip_y && y < body.legs_end &&
                                   std::abs(static_cast<int>(x) - body.cx) <= body.pants_halfw))
                paint_pose(x, y, tone_legs, body.waist_y, body.legs_end);
            if (body.torso.contains(static_cast<int>(x), static_cast<int>(y)))
                paint_pose(x, y, tone_torso, body.torso.y0, body.torso.y1);
            if (body.arm_l.contains(px, py))
                paint_pose(x, y, tone_arm_l, body.shoulder_y, body.shoulder_y + body.arm_len);
            if (body.arm_r.contains(px, py))
                paint_pose(x, y, tone_arm_r, body.shoulder_y, body.shoulder_y + body.arm_len);
            if (in_head(x, y))
                paint_pose(x, y, tone_head, body.head_cy - body.head_r, body.head_cy + body.head_r);
        }

    // ---- person image -----------------------------------------------------
    for (int64_t y = 0; y < H; ++y)
        for (int64_t x = 0; x < W; ++x) {
            const float bg = -0.92f + 0.05f * static_cast<float>(y) / static_cast<float>(H);
            std::array<float, 3> v{bg, bg, bg};
            const int32_t lab = smp.seg.at2(y, x);
            const double span = std::max(1, body.legs_end - body.shoulder_y);
            const float shade =
                static_cast<float>(0.8 + 0.2 * (static_cast<double>(y) - body.shoulder_y) / span);
            switch (lab) {
                case kSkin: v = colors.skin; break;
                case kArms:
                    v = {colors.skin[0] * shade, colors.skin[1] * shade, colors.skin[2] * shade};
                    break;
                case kTorso:
                    v = {colors.torso_skin[0] * shade, colors.torso_skin[1] * shade,
                         colors.torso_skin[2] * shade};
                    break;
                case kLowerClothes: v = colors.pants; break;
                case kUpperClothes:
                    v = {smp.gt_warped.at3(0, y, x), smp.gt_warped.at3(1, y, x),
                         smp.gt_warped.at3(2, y, x)};
                    break;
                default: break;
            }
            put3(smp.person, y, x, v);
        }

    // ---- clothing-agnostic pair -------------------------------------------
    for (int64_t y = 0; y < H; ++y)
        for (int64_t x = 0; x < W; ++x) {
            const int32_t lab = smp.seg.at2(y, x);
            smp.agnostic_seg.at2(y, x) = lab == kUpperClothes ? kBackground : lab;
            if (lab == kUpperClothes) {
                put3(smp.agnostic, y, x, {0.0f, 0.0f, 0.0f});
            } else {
                put3(smp.agnostic, y, x,
                     {smp.person.at3(0, y, x), smp.person.at3(1, y, x), smp.person.at3(2, y, x)});
            }
        }

    // ---- construction invariants ------------------------------------------
    if (spec.kind == ScenarioKind::LongSleeve) {
        // flat clothes scanline: sleeve-on, gap(>= min_gap_px)-off, torso-on
        bool found = false;
        for (int64_t y = garment.panel.y0; y < garment.panel.y1 && !found; ++y) {
            int state = 0, gap = 0;
            for (int64_t x = 0; x < W; ++x) {
                const bool on = smp.clothes_mask.at3(0, y, x) > 0.5f;
                if (state == 0 && on) state = 1;
                else if (state == 1 && !on) { state = 2; gap = 1; }
                else if (state == 2 && !on) ++gap;
                else if (state == 2 && on && gap >= spec.min_gap_px) { found = true; break; }
                else if (state == 2 && on) state = 1;
            }
        }
        if (!found)
            throw NumericError("generate_pair: long_sleeve flat garment lost its sleeve gap");
        // on-body gap: background pixels flanked by clothes in some row
        bool body_gap = false;
        for (int64_t y = body.shoulder_y; y < body.hip_y && !body_gap; ++y) {
            int state = 0, gap = 0;
            for (int64_t x = 0; x < W; ++x) {
                const bool on = sc.at3(0, y, x) > 0.5f;
                if (state == 0 && on) state = 1;
                else if (state == 1 && !on) { state = 2; gap = 1; }
                else if (state == 2 && !on) ++gap;
                else if (state == 2 && on && gap >= 2) { body_gap = true; break; }
                else if (state == 2 && on) state = 1;
            }
        }
        if (!body_gap)
            throw NumericError("generate_pair: long_sleeve person lost its sleeve-torso gap");
    }
    if (spec.kind == ScenarioKind::TuckedIn) {
        double msum = 0;
        for (int64_t i = 0; i < smp.nonroi_mask.numel(); ++i) msum += smp.nonroi_mask[i];
        if (msum <= 0) throw NumericError("generate_pair: tucked_in sample has empty non-ROI");
        if (garment.crop_y >= garment.hem_y)
            throw NumericError("generate_pair: tucked_in crop does not remove content");
    }

    return smp;
}

}  // namespace sdwarp
