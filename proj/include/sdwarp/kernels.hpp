#pragma once

#include <cmath>
#include <vector>

#include "sdwarp/common.hpp"
#include "sdwarp/tensor.hpp"

namespace sdwarp {

enum class Padding { Border, Zeros };

// Normalized coordinate conventions, fixed project-wide:
//  - x/y axes are align-corners-false: pixel i of a length-n axis sits at
//    2*(i+0.5)/n - 1. FlowField2D stores *offsets* added to this identity
//    grid (zero offset == identity sampling).
//  - The depth axis of 3D flows is align-corners-true with 2 depths:
//    z=-1 is depth 0, z=+1 is depth 1. FlowField3D stores *absolute* (x,y,z)
//    coordinates.
// Absolute coordinates are assembled in the tensor scalar type T and only
// then converted to pixel units in double, so that two call sites that build
// the same T-typed coordinate sample bit-identically.
template <typename T>
inline T identity_coord(int64_t i, int64_t n) {
    return static_cast<T>(2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n) - 1.0);
}

template <typename T>
inline std::vector<T> identity_axis(int64_t n) {
    std::vector<T> v(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) v[static_cast<size_t>(i)] = identity_coord<T>(i, n);
    return v;
}

template <typename T>
struct FlowField2D {
    Tensor<T> offsets;  // [2,h,w], channel 0 = x offsets, channel 1 = y offsets

    FlowField2D() = default;
    explicit FlowField2D(Tensor<T> t) : offsets(std::move(t)) { validate(); }
    static FlowField2D zeros(int64_t h, int64_t w) { return FlowField2D(Tensor<T>({2, h, w})); }

    int64_t height() const { return offsets.dim(1); }
    int64_t width() const { return offsets.dim(2); }

    void validate() const {
        if (offsets.rank() != 3 || offsets.dim(0) != 2)
            throw ArgumentError("FlowField2D: shape must be [2,h,w], got " +
                                Tensor<T>::shape_str(offsets.shape()));
        if (!offsets.all_finite()) throw NumericError("FlowField2D: non-finite entries");
    }
};

template <typename T>
struct FlowField3D {
    Tensor<T> coords;  // [3,2,h,w], channels (x,y,z) x output depth x spatial

    FlowField3D() = default;
    explicit FlowField3D(Tensor<T> t) : coords(std::move(t)) { validate(); }

    int64_t height() const { return coords.dim(2); }
    int64_t width() const { return coords.dim(3); }

    void validate() const {
        if (coords.rank() != 4 || coords.dim(0) != 3 || coords.dim(1) != 2)
            throw ArgumentError("FlowField3D: shape must be [3,2,h,w], got " +
                                Tensor<T>::shape_str(coords.shape()));
        if (!coords.all_finite()) throw NumericError("FlowField3D: non-finite entries");
    }
};

template <typename T>
struct SamplingGrid {
    Tensor<T> coords;  // [2,h,w] absolute normalized coordinates
};

// Identity grid: grid_sample at these coordinates reproduces the input.
template <typename T>
SamplingGrid<T> make_identity_grid(int64_t h, int64_t w) {
    if (h < 1 || w < 1) throw ArgumentError("make_identity_grid: dimensions must be positive");
    SamplingGrid<T> g;
    g.coords = Tensor<T>({2, h, w});
    const auto gx = identity_axis<T>(w);
    const auto gy = identity_axis<T>(h);
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x) {
            g.coords.at3(0, y, x) = gx[static_cast<size_t>(x)];
            g.coords.at3(1, y, x) = gy[static_cast<size_t>(y)];
        }
    return g;
}

// The identity base grid for 3D flows: xy identity at both output depths,
// z = -1 at depth 0 and z = +1 at depth 1.
template <typename T>
Tensor<T> make_identity_grid_3d(int64_t h, int64_t w) {
    Tensor<T> g({3, 2, h, w});
    const auto gx = identity_axis<T>(w);
    const auto gy = identity_axis<T>(h);
    for (int64_t d = 0; d < 2; ++d)
        for (int64_t y = 0; y < h; ++y)
            for (int64_t x = 0; x < w; ++x) {
                const int64_t hw = h * w;
                g[(0 * 2 + d) * hw + y * w + x] = gx[static_cast<size_t>(x)];
                g[(1 * 2 + d) * hw + y * w + x] = gy[static_cast<size_t>(y)];
                g[(2 * 2 + d) * hw + y * w + x] = static_cast<T>(d == 0 ? -1.0 : 1.0);
            }
    return g;
}

namespace detail {

// One bilinear tap setup along an axis: pixel position, floor cell, fraction,
// tap indices and their validity under the padding mode.
struct AxisTap {
    int64_t i0 = 0, i1 = 0;   // clamped tap indices
    double f = 0.0;           // fraction in [0,1)
    double v0 = 1.0, v1 = 1.0;  // tap validity multipliers (zeros padding)
};

// Pixel positions this close to an exact center snap onto it. Identity
// coordinates stored in float round-trip to within ~6e-5 px at 1024-wide
// images; snapping makes identity sampling exact, which the sequential-stage
// equality and erasure guarantees rely on.
inline constexpr double kCenterSnapEps = 2.5e-4;

inline double snap_center(double p) {
    const double r = std::nearbyint(p);
    return std::abs(p - r) <= kCenterSnapEps ? r : p;
}

inline AxisTap axis_tap(double coord_norm, int64_t n, Padding pad) {
    const double p =
        snap_center((coord_norm + 1.0) * 0.5 * static_cast<double>(n) - 0.5);
    AxisTap t;
    const double fl = std::floor(p);
    int64_t i0 = static_cast<int64_t>(fl);
    t.f = p - fl;
    int64_t i1 = i0 + 1;
    if (pad == Padding::Border) {
        t.i0 = std::min(std::max(i0, int64_t(0)), n - 1);
        t.i1 = std::min(std::max(i1, int64_t(0)), n - 1);
    } else {
        t.v0 = (i0 >= 0 && i0 < n) ? 1.0 : 0.0;
        t.v1 = (i1 >= 0 && i1 < n) ? 1.0 : 0.0;
        t.i0 = std::min(std::max(i0, int64_t(0)), n - 1);
        t.i1 = std::min(std::max(i1, int64_t(0)), n - 1);
    }
    return t;
}

// Depth axis uses align-corners-true: pd = (z+1)/2 * (n-1) with n == 2.
inline AxisTap depth_tap(double z_norm, Padding pad) {
    const double p = snap_center((z_norm + 1.0) * 0.5);
    AxisTap t;
    const double fl = std::floor(p);
    int64_t i0 = static_cast<int64_t>(fl);
    t.f = p - fl;
    int64_t i1 = i0 + 1;
    if (pad == Padding::Border) {
        t.i0 = std::min(std::max(i0, int64_t(0)), int64_t(1));
        t.i1 = std::min(std::max(i1, int64_t(0)), int64_t(1));
    } else {
        t.v0 = (i0 >= 0 && i0 < 2) ? 1.0 : 0.0;
        t.v1 = (i1 >= 0 && i1 < 2) ? 1.0 : 0.0;
        t.i0 = std::min(std::max(i0, int64_t(0)), int64_t(1));
        t.i1 = std::min(std::max(i1, int64_t(0)), int64_t(1));
    }
    return t;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Raw 2D bilinear sampling over one sample. offsets may be null (absolute
// coords passed instead), see gs2d_forward_abs.
// ---------------------------------------------------------------------------

template <typename T>
void gs2d_forward_raw(const T* in, int64_t C, int64_t H, int64_t W, const T* off, Padding pad,
                      T* out) {
    const auto gx = identity_axis<T>(W);
    const auto gy = identity_axis<T>(H);
    const int64_t hw = H * W;
    for (int64_t y = 0; y < H; ++y) {
        for (int64_t x = 0; x < W; ++x) {
            const int64_t p = y * W + x;
            const T ax = static_cast<T>(gx[static_cast<size_t>(x)] + off[p]);
            const T ay = static_cast<T>(gy[static_cast<size_t>(y)] + off[hw + p]);
            const auto tx = detail::axis_tap(static_cast<double>(ax), W, pad);
            const auto ty = detail::axis_tap(static_cast<double>(ay), H, pad);
            const double w00 = (1.0 - ty.f) * (1.0 - tx.f) * ty.v0 * tx.v0;
            const double w01 = (1.0 - ty.f) * tx.f * ty.v0 * tx.v1;
            const double w10 = ty.f * (1.0 - tx.f) * ty.v1 * tx.v0;
            const double w11 = ty.f * tx.f * ty.v1 * tx.v1;
            const int64_t r0 = ty.i0 * W, r1 = ty.i1 * W;
            for (int64_t c = 0; c < C; ++c) {
                const T* pl = in + c * hw;
                const double v = w00 * static_cast<double>(pl[r0 + tx.i0]) +
                                 w01 * static_cast<double>(pl[r0 + tx.i1]) +
                                 w10 * static_cast<double>(pl[r1 + tx.i0]) +
                                 w11 * static_cast<double>(pl[r1 + tx.i1]);
                out[c * hw + p] = static_cast<T>(v);
            }
        }
    }
}

// Backward of gs2d_forward_raw. grad_in and grad_off are accumulated into
// when non-null; both must be pre-zeroed (or hold prior accumulations).
template <typename T>
void gs2d_backward_raw(const T* in, int64_t C, int64_t H, int64_t W, const T* off, Padding pad,
                       const T* gout, T* grad_in, T* grad_off) {
    const auto gx = identity_axis<T>(W);
    const auto gy = identity_axis<T>(H);
    const int64_t hw = H * W;
    for (int64_t y = 0; y < H; ++y) {
        for (int64_t x = 0; x < W; ++x) {
            const int64_t p = y * W + x;
            const T ax = static_cast<T>(gx[static_cast<size_t>(x)] + off[p]);
            const T ay = static_cast<T>(gy[static_cast<size_t>(y)] + off[hw + p]);
            const auto tx = detail::axis_tap(static_cast<double>(ax), W, pad);
            const auto ty = detail::axis_tap(static_cast<double>(ay), H, pad);
            const int64_t r0 = ty.i0 * W, r1 = ty.i1 * W;
            double gax = 0.0, gay = 0.0;
            for (int64_t c = 0; c < C; ++c) {
                const T* pl = in + c * hw;
                const double g = static_cast<double>(gout[c * hw + p]);
                const double v00 = ty.v0 * tx.v0 * static_cast<double>(pl[r0 + tx.i0]);
                const double v01 = ty.v0 * tx.v1 * static_cast<double>(pl[r0 + tx.i1]);
                const double v10 = ty.v1 * tx.v0 * static_cast<double>(pl[r1 + tx.i0]);
                const double v11 = ty.v1 * tx.v1 * static_cast<double>(pl[r1 + tx.i1]);
                gax += g * ((1.0 - ty.f) * (v01 - v00) + ty.f * (v11 - v10));
                gay += g * ((1.0 - tx.f) * (v10 - v00) + tx.f * (v11 - v01));
                if (grad_in) {
                    T* gp = grad_in + c * hw;
                    gp[r0 + tx.i0] += static_cast<T>(g * (1.0 - ty.f) * (1.0 - tx.f) * ty.v0 * tx.v0);
                    gp[r0 + tx.i1] += static_cast<T>(g * (1.0 - ty.f) * tx.f * ty.v0 * tx.v1);
                    gp[r1 + tx.i0] += static_cast<T>(g * ty.f * (1.0 - tx.f) * ty.v1 * tx.v0);
                    gp[r1 + tx.i1] += static_cast<T>(g * ty.f * tx.f * ty.v1 * tx.v1);
                }
            }
            if (grad_off) {
                // d(pixel pos)/d(normalized coord) per axis
                grad_off[p] += static_cast<T>(gax * 0.5 * static_cast<double>(W));
                grad_off[hw + p] += static_cast<T>(gay * 0.5 * static_cast<double>(H));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Raw 3D trilinear sampling over one sample: volume [C,2,H,W], absolute
// coords [3,2,H,W].
// ---------------------------------------------------------------------------

template <typename T>
void gs3d_forward_raw(const T* vol, int64_t C, int64_t H, int64_t W, const T* coords, Padding pad,
                      T* out) {
    const int64_t hw = H * W;
    const int64_t dhw = 2 * hw;
    for (int64_t d = 0; d < 2; ++d) {
        for (int64_t y = 0; y < H; ++y) {
            for (int64_t x = 0; x < W; ++x) {
                const int64_t p = d * hw + y * W + x;
                const T axv = coords[0 * dhw + p];
                const T ayv = coords[1 * dhw + p];
                const T azv = coords[2 * dhw + p];
                const auto tx = detail::axis_tap(static_cast<double>(axv), W, pad);
                const auto ty = detail::axis_tap(static_cast<double>(ayv), H, pad);
                const auto tz = detail::depth_tap(static_cast<double>(azv), pad);
                const double w00 = (1.0 - ty.f) * (1.0 - tx.f) * ty.v0 * tx.v0;
                const double w01 = (1.0 - ty.f) * tx.f * ty.v0 * tx.v1;
                const double w10 = ty.f * (1.0 - tx.f) * ty.v1 * tx.v0;
                const double w11 = ty.f * tx.f * ty.v1 * tx.v1;
                const int64_t r0 = ty.i0 * W, r1 = ty.i1 * W;
                for (int64_t c = 0; c < C; ++c) {
                    const T* p0 = vol + c * dhw + tz.i0 * hw;
                    const T* p1 = vol + c * dhw + tz.i1 * hw;
                    const double b0 = w00 * static_cast<double>(p0[r0 + tx.i0]) +
                                      w01 * static_cast<double>(p0[r0 + tx.i1]) +
                                      w10 * static_cast<double>(p0[r1 + tx.i0]) +
                                      w11 * static_cast<double>(p0[r1 + tx.i1]);
                    const double b1 = w00 * static_cast<double>(p1[r0 + tx.i0]) +
                                      w01 * static_cast<double>(p1[r0 + tx.i1]) +
                                      w10 * static_cast<double>(p1[r1 + tx.i0]) +
                                      w11 * static_cast<double>(p1[r1 + tx.i1]);
                    out[c * dhw + p] =
                        static_cast<T>((1.0 - tz.f) * tz.v0 * b0 + tz.f * tz.v1 * b1);
                }
            }
        }
    }
}

template <typename T>
void gs3d_backward_raw(const T* vol, int64_t C, int64_t H, int64_t W, const T* coords, Padding pad,
                       const T* gout, T* grad_vol, T* grad_coords) {
    const int64_t hw = H * W;
    const int64_t dhw = 2 * hw;
    for (int64_t d = 0; d < 2; ++d) {
        for (int64_t y = 0; y < H; ++y) {
            for (int64_t x = 0; x < W; ++x) {
                const int64_t p = d * hw + y * W + x;
                const auto tx = detail::axis_tap(static_cast<double>(coords[0 * dhw + p]), W, pad);
                const auto ty = detail::axis_tap(static_cast<double>(coords[1 * dhw + p]), H, pad);
                const auto tz = detail::depth_tap(static_cast<double>(coords[2 * dhw + p]), pad);
                const int64_t r0 = ty.i0 * W, r1 = ty.i1 * W;
                const double wz0 = (1.0 - tz.f) * tz.v0, wz1 = tz.f * tz.v1;
                double gax = 0.0, gay = 0.0, gaz = 0.0;
                for (int64_t c = 0; c < C; ++c) {
                    const double g = static_cast<double>(gout[c * dhw + p]);
                    for (int64_t dz = 0; dz < 2; ++dz) {
                        const int64_t zi = dz == 0 ? tz.i0 : tz.i1;
                        const double wz = dz == 0 ? wz0 : wz1;
                        const T* pl = vol + c * dhw + zi * hw;
                        const double v00 = ty.v0 * tx.v0 * static_cast<double>(pl[r0 + tx.i0]);
                        const double v01 = ty.v0 * tx.v1 * static_cast<double>(pl[r0 + tx.i1]);
                        const double v10 = ty.v1 * tx.v0 * static_cast<double>(pl[r1 + tx.i0]);
                        const double v11 = ty.v1 * tx.v1 * static_cast<double>(pl[r1 + tx.i1]);
                        const double bil = (1.0 - ty.f) * ((1.0 - tx.f) * v00 + tx.f * v01) +
                                           ty.f * ((1.0 - tx.f) * v10 + tx.f * v11);
                        gax += g * wz * ((1.0 - ty.f) * (v01 - v00) + ty.f * (v11 - v10));
                        gay += g * wz * ((1.0 - tx.f) * (v10 - v00) + tx.f * (v11 - v01));
                        gaz += g * (dz == 0 ? -tz.v0 * bil : tz.v1 * bil);
                        if (grad_vol) {
                            T* gp = grad_vol + c * dhw + zi * hw;
                            gp[r0 + tx.i0] +=
                                static_cast<T>(g * wz * (1.0 - ty.f) * (1.0 - tx.f) * ty.v0 * tx.v0);
                            gp[r0 + tx.i1] +=
                                static_cast<T>(g * wz * (1.0 - ty.f) * tx.f * ty.v0 * tx.v1);
                            gp[r1 + tx.i0] +=
                                static_cast<T>(g * wz * ty.f * (1.0 - tx.f) * ty.v1 * tx.v0);
                            gp[r1 + tx.i1] += static_cast<T>(g * wz * ty.f * tx.f * ty.v1 * tx.v1);
                        }
                    }
                }
                if (grad_coords) {
                    grad_coords[0 * dhw + p] += static_cast<T>(gax * 0.5 * static_cast<double>(W));
                    grad_coords[1 * dhw + p] += static_cast<T>(gay * 0.5 * static_cast<double>(H));
                    grad_coords[2 * dhw + p] += static_cast<T>(gaz * 0.5);
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Bilinear upsampling by an integer factor (align-corners-false, border
// clamped). Offsets are normalized, so no magnitude rescaling.
// ---------------------------------------------------------------------------

template <typename T>
void upsample_bilinear_raw(const T* in, int64_t C, int64_t H, int64_t W, int64_t factor, T* out) {
    const int64_t OH = H * factor, OW = W * factor;
    const double inv = 1.0 / static_cast<double>(factor);
    std::vector<int64_t> xi0(static_cast<size_t>(OW)), xi1(static_cast<size_t>(OW));
    std::vector<double> xf(static_cast<size_t>(OW));
    for (int64_t x = 0; x < OW; ++x) {
        const double sx = (static_cast<double>(x) + 0.5) * inv - 0.5;
        const double fl = std::floor(sx);
        int64_t i0 = static_cast<int64_t>(fl);
        xf[static_cast<size_t>(x)] = sx - fl;
        xi0[static_cast<size_t>(x)] = std::min(std::max(i0, int64_t(0)), W - 1);
        xi1[static_cast<size_t>(x)] = std::min(std::max(i0 + 1, int64_t(0)), W - 1);
    }
    for (int64_t c = 0; c < C; ++c) {
        const T* pl = in + c * H * W;
        T* po = out + c * OH * OW;
        for (int64_t y = 0; y < OH; ++y) {
            const double sy = (static_cast<double>(y) + 0.5) * inv - 0.5;
            const double fl = std::floor(sy);
            int64_t j0 = static_cast<int64_t>(fl);
            const double fy = sy - fl;
            const int64_t y0 = std::min(std::max(j0, int64_t(0)), H - 1);
            const int64_t y1 = std::min(std::max(j0 + 1, int64_t(0)), H - 1);
            for (int64_t x = 0; x < OW; ++x) {
                const double fx = xf[static_cast<size_t>(x)];
                const double v =
                    (1.0 - fy) * ((1.0 - fx) * static_cast<double>(pl[y0 * W + xi0[static_cast<size_t>(x)]]) +
                                  fx * static_cast<double>(pl[y0 * W + xi1[static_cast<size_t>(x)]])) +
                    fy * ((1.0 - fx) * static_cast<double>(pl[y1 * W + xi0[static_cast<size_t>(x)]]) +
                          fx * static_cast<double>(pl[y1 * W + xi1[static_cast<size_t>(x)]]));
                po[y * OW + x] = static_cast<T>(v);
            }
        }
    }
}

// Transpose of upsample_bilinear_raw: scatters grad_out back to input cells.
template <typename T>
void upsample_bilinear_backward_raw(int64_t C, int64_t H, int64_t W, int64_t factor,
                                    const T* gout, T* gin) {
    const int64_t OH = H * factor, OW = W * factor;
    const double inv = 1.0 / static_cast<double>(factor);
    for (int64_t c = 0; c < C; ++c) {
        const T* go = gout + c * OH * OW;
        T* gi = gin + c * H * W;
        for (int64_t y = 0; y < OH; ++y) {
            const double sy = (static_cast<double>(y) + 0.5) * inv - 0.5;
            const double fl = std::floor(sy);
            int64_t j0 = static_cast<int64_t>(fl);
            const double fy = sy - fl;
            const int64_t y0 = std::min(std::max(j0, int64_t(0)), H - 1);
            const int64_t y1 = std::min(std::max(j0 + 1, int64_t(0)), H - 1);
            for (int64_t x = 0; x < OW; ++x) {
                const double sx = (static_cast<double>(x) + 0.5) * inv - 0.5;
                const double flx = std::floor(sx);
                int64_t i0 = static_cast<int64_t>(flx);
                const double fx = sx - flx;
                const int64_t x0 = std::min(std::max(i0, int64_t(0)), W - 1);
                const int64_t x1 = std::min(std::max(i0 + 1, int64_t(0)), W - 1);
                const double g = static_cast<double>(go[y * OW + x]);
                gi[y0 * W + x0] += static_cast<T>(g * (1.0 - fy) * (1.0 - fx));
                gi[y0 * W + x1] += static_cast<T>(g * (1.0 - fy) * fx);
                gi[y1 * W + x0] += static_cast<T>(g * fy * (1.0 - fx));
                gi[y1 * W + x1] += static_cast<T>(g * fy * fx);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Spec-level single-sample API.
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> grid_sample_2d(const Tensor<T>& input, const FlowField2D<T>& flow, Padding pad) {
    if (input.rank() != 3) throw ArgumentError("grid_sample_2d: input must be [c,h,w]");
    flow.validate();
    if (input.dim(1) != flow.height() || input.dim(2) != flow.width())
        throw ArgumentError("grid_sample_2d: flow resolution does not match input");
    Tensor<T> out(input.shape());
    gs2d_forward_raw(input.data(), input.dim(0), input.dim(1), input.dim(2), flow.offsets.data(),
                     pad, out.data());
    return out;
}

template <typename T>
Tensor<T> grid_sample_3d(const Tensor<T>& volume, const FlowField3D<T>& flow, Padding pad) {
    if (volume.rank() != 4) throw ArgumentError("grid_sample_3d: volume must be [c,2,h,w]");
    if (volume.dim(1) != 2) throw ArgumentError("grid_sample_3d: volume depth must be exactly 2");
    flow.validate();
    if (volume.dim(2) != flow.height() || volume.dim(3) != flow.width())
        throw ArgumentError("grid_sample_3d: flow resolution does not match volume");
    Tensor<T> out(volume.shape());
    gs3d_forward_raw(volume.data(), volume.dim(0), volume.dim(2), volume.dim(3),
                     flow.coords.data(), pad, out.data());
    return out;
}

template <typename T>
FlowField2D<T> upsample_flow(const FlowField2D<T>& flow, int64_t factor) {
    if (factor < 1) throw ArgumentError("upsample_flow: factor must be >= 1");
    flow.validate();
    if (factor == 1) return flow;
    FlowField2D<T> out;
    out.offsets = Tensor<T>({2, flow.height() * factor, flow.width() * factor});
    upsample_bilinear_raw(flow.offsets.data(), 2, flow.height(), flow.width(), factor,
                          out.offsets.data());
    return out;
}

template <typename T>
FlowField2D<T> accumulate_flows(const FlowField2D<T>& previous, const FlowField2D<T>& delta) {
    if (!previous.offsets.same_shape(delta.offsets))
        throw ArgumentError("accumulate_flows: resolution mismatch");
    FlowField2D<T> out;
    out.offsets = Tensor<T>(previous.offsets.shape());
    for (int64_t i = 0; i < out.offsets.numel(); ++i)
        out.offsets[i] = static_cast<T>(previous.offsets[i] + delta.offsets[i]);
    return out;
}

// Depth 0 holds the plane, depth 1 is the 0-filled slice texture is borrowed
// from when erasing.
template <typename T>
Tensor<T> stack_zero_depth(const Tensor<T>& plane) {
    if (plane.rank() != 3) throw ArgumentError("stack_zero_depth: input must be [c,h,w]");
    if (plane.dim(0) < 1) throw ArgumentError("stack_zero_depth: channel count must be >= 1");
    if (!plane.all_finite()) throw NumericError("stack_zero_depth: non-finite input");
    const int64_t c = plane.dim(0), h = plane.dim(1), w = plane.dim(2);
    Tensor<T> out({c, 2, h, w});
    const int64_t hw = h * w;
    for (int64_t k = 0; k < c; ++k)
        std::memcpy(out.data() + k * 2 * hw, plane.data() + k * hw, sizeof(T) * static_cast<size_t>(hw));
    return out;
}

}  // namespace sdwarp
