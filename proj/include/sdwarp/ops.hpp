#pragma once

#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sdwarp/autograd.hpp"
#include "sdwarp/gemm.hpp"
#include "sdwarp/kernels.hpp"

namespace sdwarp {

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

template <typename T>
Var<T> leaky_relu(const Var<T>& a, T slope = T(0.2)) {
    Tensor<T> out(a->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) {
        const T x = a->value[i];
        out[i] = x > T(0) ? x : slope * x;
    }
    return make_op<T>("leaky_relu", std::move(out), {a}, [slope](Node<T>& n) {
        auto& g = n.inputs[0]->ensure_grad();
        for (int64_t i = 0; i < g.numel(); ++i)
            g[i] += n.grad[i] * (n.inputs[0]->value[i] > T(0) ? T(1) : slope);
    });
}

template <typename T>
Var<T> tanh_op(const Var<T>& a) {
    Tensor<T> out(a->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(a->value[i]);
    return make_op<T>("tanh", std::move(out), {a}, [](Node<T>& n) {
        auto& g = n.inputs[0]->ensure_grad();
        for (int64_t i = 0; i < g.numel(); ++i) {
            const T y = n.value[i];
            g[i] += n.grad[i] * (T(1) - y * y);
        }
    });
}

template <typename T>
Var<T> sigmoid(const Var<T>& a) {
    Tensor<T> out(a->value.shape());
    for (int64_t i = 0; i < out.numel(); ++i)
        out[i] = static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(a->value[i]))));
    return make_op<T>("sigmoid", std::move(out), {a}, [](Node<T>& n) {
        auto& g = n.inputs[0]->ensure_grad();
        for (int64_t i = 0; i < g.numel(); ++i) {
            const T y = n.value[i];
            g[i] += n.grad[i] * y * (T(1) - y);
        }
    });
}

// Channel softmax for [N,C,H,W].
template <typename T>
Var<T> softmax_channels(const Var<T>& a) {
    const auto& s = a->value.shape();
    if (s.size() != 4) throw ArgumentError("softmax_channels: expects [N,C,H,W]");
    const int64_t N = s[0], C = s[1], HW = s[2] * s[3];
    Tensor<T> out(s);
    for (int64_t n = 0; n < N; ++n) {
        for (int64_t p = 0; p < HW; ++p) {
            const T* in = a->value.data() + n * C * HW;
            T* o = out.data() + n * C * HW;
            double mx = -1e300;
            for (int64_t c = 0; c < C; ++c) mx = std::max(mx, static_cast<double>(in[c * HW + p]));
            double z = 0;
            for (int64_t c = 0; c < C; ++c) z += std::exp(static_cast<double>(in[c * HW + p]) - mx);
            for (int64_t c = 0; c < C; ++c)
                o[c * HW + p] = static_cast<T>(std::exp(static_cast<double>(in[c * HW + p]) - mx) / z);
        }
    }
    return make_op<T>("softmax", std::move(out), {a}, [N, C, HW](Node<T>& n) {
        auto& g = n.inputs[0]->ensure_grad();
        for (int64_t b = 0; b < N; ++b) {
            const T* y = n.value.data() + b * C * HW;
            const T* gy = n.grad.data() + b * C * HW;
            T* gx = g.data() + b * C * HW;
            for (int64_t p = 0; p < HW; ++p) {
                double dot = 0;
                for (int64_t c = 0; c < C; ++c)
                    dot += static_cast<double>(gy[c * HW + p]) * static_cast<double>(y[c * HW + p]);
                for (int64_t c = 0; c < C; ++c)
                    gx[c * HW + p] += static_cast<T>(
                        static_cast<double>(y[c * HW + p]) *
                        (static_cast<double>(gy[c * HW + p]) - dot));
            }
        }
    });
}

// ---------------------------------------------------------------------------
// conv2d: x [N,Cin,H,W], w [Cout,Cin,kh,kw], b [Cout]; zero padding, stride.
// im2col + GEMM; parallel across batch with per-sample weight-grad buffers
// reduced in sample order.
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
void im2col(const T* x, int64_t C, int64_t H, int64_t W, int64_t kh, int64_t kw, int64_t stride,
            int64_t pad, int64_t OH, int64_t OW, T* cols /* [C*kh*kw, OH*OW] */) {
    const int64_t ohw = OH * OW;
    for (int64_t c = 0; c < C; ++c) {
        for (int64_t ky = 0; ky < kh; ++ky) {
            for (int64_t kx = 0; kx < kw; ++kx) {
                T* row = cols + ((c * kh + ky) * kw + kx) * ohw;
                for (int64_t oy = 0; oy < OH; ++oy) {
                    const int64_t iy = oy * stride + ky - pad;
                    if (iy < 0 || iy >= H) {
                        for (int64_t ox = 0; ox < OW; ++ox) row[oy * OW + ox] = T(0);
                        continue;
                    }
                    const T* src = x + (c * H + iy) * W;
                    for (int64_t ox = 0; ox < OW; ++ox) {
                        const int64_t ix = ox * stride + kx - pad;
                        row[oy * OW + ox] = (ix >= 0 && ix < W) ? src[ix] : T(0);
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im(const T* cols, int64_t C, int64_t H, int64_t W, int64_t kh, int64_t kw, int64_t stride,
            int64_t pad, int64_t OH, int64_t OW, T* gx /* accumulated */) {
    const int64_t ohw = OH * OW;
    for (int64_t c = 0; c < C; ++c) {
        for (int64_t ky = 0; ky < kh; ++ky) {
            for (int64_t kx = 0; kx < kw; ++kx) {
                const T* row = cols + ((c * kh + ky) * kw + kx) * ohw;
                for (int64_t oy = 0; oy < OH; ++oy) {
                    const int64_t iy = oy * stride + ky - pad;
                    if (iy < 0 || iy >= H) continue;
                    T* dst = gx + (c * H + iy) * W;
                    for (int64_t ox = 0; ox < OW; ++ox) {
                        const int64_t ix = ox * stride + kx - pad;
                        if (ix >= 0 && ix < W) dst[ix] += row[oy * OW + ox];
                    }
                }
            }
        }
    }
}

}  // namespace detail

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int64_t stride = 1,
              int64_t pad = 1) {
    const auto& xs = x->value.shape();
    const auto& ws = w->value.shape();
    if (xs.size() != 4 || ws.size() != 4) throw ArgumentError("conv2d: bad ranks");
    if (xs[1] != ws[1]) throw ArgumentError("conv2d: channel mismatch");
    const int64_t N = xs[0], Cin = xs[1], H = xs[2], W = xs[3];
    const int64_t Cout = ws[0], kh = ws[2], kw = ws[3];
    if (b->value.numel() != Cout) throw ArgumentError("conv2d: bias size mismatch");
    const int64_t OH = (H + 2 * pad - kh) / stride + 1;
    const int64_t OW = (W + 2 * pad - kw) / stride + 1;
    const int64_t CK = Cin * kh * kw, OHW = OH * OW;

    Tensor<T> out({N, Cout, OH, OW});
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int64_t n = 0; n < N; ++n) {
        std::vector<T> cols(static_cast<size_t>(CK * OHW));
        detail::im2col(x->value.data() + n * Cin * H * W, Cin, H, W, kh, kw, stride, pad, OH, OW,
                       cols.data());
        gemm_nn(w->value.data(), cols.data(), out.data() + n * Cout * OHW, Cout, CK, OHW, false);
        for (int64_t c = 0; c < Cout; ++c) {
            T* o = out.data() + (n * Cout + c) * OHW;
            const T bias = b->value[c];
            for (int64_t i = 0; i < OHW; ++i) o[i] += bias;
        }
    }

    auto bw = [N, Cin, H, W, Cout, kh, kw, stride, pad, OH, OW, CK, OHW](Node<T>& node) {
        auto& xin = node.inputs[0];
        auto& win = node.inputs[1];
        auto& bin = node.inputs[2];
        const bool need_gx = xin->requires_grad;
        const bool need_gw = win->requires_grad;
        const bool need_gb = bin->requires_grad;
        if (need_gx) xin->ensure_grad();
        if (need_gw) win->ensure_grad();
        if (need_gb) bin->ensure_grad();
        // Per-sample weight-gradient partials, reduced in fixed order below.
        std::vector<Tensor<T>> gw_parts;
        if (need_gw) gw_parts.assign(static_cast<size_t>(N), Tensor<T>(win->value.shape()));
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (int64_t n = 0; n < N; ++n) {
            const T* gout = node.grad.data() + n * Cout * OHW;
            std::vector<T> cols;
            if (need_gw || need_gx) {
                cols.resize(static_cast<size_t>(CK * OHW));
                detail::im2col(xin->value.data() + n * Cin * H * W, Cin, H, W, kh, kw, stride, pad,
                               OH, OW, cols.data());
            }
            if (need_gw)
                gemm_nt(gout, cols.data(), gw_parts[static_cast<size_t>(n)].data(), Cout, OHW, CK,
                        false);
            if (need_gx) {
                std::vector<T> gcols(static_cast<size_t>(CK * OHW));
                gemm_tn(win->value.data(), gout, gcols.data(), CK, Cout, OHW, false);
                detail::col2im(gcols.data(), Cin, H, W, kh, kw, stride, pad, OH, OW,
                               xin->grad.data() + n * Cin * H * W);
            }
        }
        if (need_gw)
            for (int64_t n = 0; n < N; ++n)
                for (int64_t i = 0; i < win->grad.numel(); ++i)
                    win->grad[i] += gw_parts[static_cast<size_t>(n)][i];
        if (need_gb)
            for (int64_t n = 0; n < N; ++n)
                for (int64_t c = 0; c < Cout; ++c) {
                    const T* g = node.grad.data() + (n * Cout + c) * OHW;
                    double acc = 0;
                    for (int64_t i = 0; i < OHW; ++i) acc += static_cast<double>(g[i]);
                    bin->grad[c] += static_cast<T>(acc);
                }
    };
    return make_op<T>("conv2d", std::move(out), {x, w, b}, bw);
}

// ---------------------------------------------------------------------------
// conv3d over [N,C,2,H,W] volumes with a kh x kw x 3 kernel laid out as
// [Cout,Cin,kz=3,kh,kw]. Depth padding replicates the two slices (border),
// spatial padding is zeros, stride 1.
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
void im2col3d(const T* x, int64_t C, int64_t H, int64_t W, int64_t k, T* cols) {
    // k x k x 3 neighborhood; depth index clamped to {0,1}; output [C*3*k*k, 2*H*W]
    const int64_t hw = H * W;
    const int64_t pad = k / 2;
    const int64_t ohw = 2 * hw;
    for (int64_t c = 0; c < C; ++c) {
        for (int64_t kz = 0; kz < 3; ++kz) {
            for (int64_t ky = 0; ky < k; ++ky) {
                for (int64_t kx = 0; kx < k; ++kx) {
                    T* row = cols + (((c * 3 + kz) * k + ky) * k + kx) * ohw;
                    for (int64_t d = 0; d < 2; ++d) {
                        const int64_t iz = std::min(std::max(d + kz - 1, int64_t(0)), int64_t(1));
                        for (int64_t oy = 0; oy < H; ++oy) {
                            const int64_t iy = oy + ky - pad;
                            T* dst = row + d * hw + oy * W;
                            if (iy < 0 || iy >= H) {
                                for (int64_t ox = 0; ox < W; ++ox) dst[ox] = T(0);
                                continue;
                            }
                            const T* src = x + ((c * 2 + iz) * H + iy) * W;
                            for (int64_t ox = 0; ox < W; ++ox) {
                                const int64_t ix = ox + kx - pad;
                                dst[ox] = (ix >= 0 && ix < W) ? src[ix] : T(0);
                            }
                        }
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im3d(const T* cols, int64_t C, int64_t H, int64_t W, int64_t k, T* gx) {
    const int64_t hw = H * W;
    const int64_t pad = k / 2;
    const int64_t ohw = 2 * hw;
    for (int64_t c = 0; c < C; ++c) {
        for (int64_t kz = 0; kz < 3; ++kz) {
            for (int64_t ky = 0; ky < k; ++ky) {
                for (int64_t kx = 0; kx < k; ++kx) {
                    const T* row = cols + (((c * 3 + kz) * k + ky) * k + kx) * ohw;
                    for (int64_t d = 0; d < 2; ++d) {
                        const int64_t iz = std::min(std::max(d + kz - 1, int64_t(0)), int64_t(1));
                        for (int64_t oy = 0; oy < H; ++oy) {
                            const int64_t iy = oy + ky - pad;
                            if (iy < 0 || iy >= H) continue;
                            const T* src = row + d * hw + oy * W;
                            T* dst = gx + ((c * 2 + iz) * H + iy) * W;
                            for (int64_t ox = 0; ox < W; ++ox) {
                                const int64_t ix = ox + kx - pad;
                                if (ix >= 0 && ix < W) dst[ix] += src[ox];
                            }
                        }
                    }
                }
            }
        }
    }
}

}  // namespace detail

template <typename T>
Var<T> conv3d(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
    const auto& xs = x->value.shape();
    const auto& ws = w->value.shape();
    if (xs.size() != 5 || xs[2] != 2) throw ArgumentError("conv3d: expects [N,C,2,H,W]");
    if (ws.size() != 5 || ws[2] != 3 || ws[3] != ws[4])
        throw ArgumentError("conv3d: kernel must be [Cout,Cin,3,k,k]");
    if (xs[1] != ws[1]) throw ArgumentError("conv3d: channel mismatch");
    const int64_t N = xs[0], Cin = xs[1], H = xs[3], W = xs[4];
    const int64_t Cout = ws[0], k = ws[3];
    const int64_t CK = Cin * 3 * k * k, OHW = 2 * H * W;
    if (b->value.numel() != Cout) throw ArgumentError("conv3d: bias size mismatch");

    Tensor<T> out({N, Cout, 2, H, W});
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int64_t n = 0; n < N; ++n) {
        std::vector<T> cols(static_cast<size_t>(CK * OHW));
        detail::im2col3d(x->value.data() + n * Cin * OHW, Cin, H, W, k, cols.data());
        gemm_nn(w->value.data(), cols.data(), out.data() + n * Cout * OHW, Cout, CK, OHW, false);
        for (int64_t c = 0; c < Cout; ++c) {
            T* o = out.data() + (n * Cout + c) * OHW;
            const T bias = b->value[c];
            for (int64_t i = 0; i < OHW; ++i) o[i] += bias;
        }
    }

    auto bw = [N, Cin, H, W, Cout, k, CK, OHW](Node<T>& node) {
        auto& xin = node.inputs[0];
        auto& win = node.inputs[1];
        auto& bin = node.inputs[2];
        const bool need_gx = xin->requires_grad;
        const bool need_gw = win->requires_grad;
        if (need_gx) xin->ensure_grad();
        if (need_gw) win->ensure_grad();
        if (bin->requires_grad) bin->ensure_grad();
        std::vector<Tensor<T>> gw_parts;
        if (need_gw) gw_parts.assign(static_cast<size_t>(N), Tensor<T>(win->value.shape()));
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (int64_t n = 0; n < N; ++n) {
            const T* gout = node.grad.data() + n * Cout * OHW;
            std::vector<T> cols(static_cast<size_t>(CK * OHW));
            detail::im2col3d(xin->value.data() + n * Cin * OHW, Cin, H, W, k, cols.data());
            if (need_gw)
                gemm_nt(gout, cols.data(), gw_parts[static_cast<size_t>(n)].data(), Cout, OHW, CK,
                        false);
            if (need_gx) {
                std::vector<T> gcols(static_cast<size_t>(CK * OHW));
                gemm_tn(win->value.data(), gout, gcols.data(), CK, Cout, OHW, false);
                detail::col2im3d(gcols.data(), Cin, H, W, k, xin->grad.data() + n * Cin * OHW);
            }
        }
        if (need_gw)
            for (int64_t n = 0; n < N; ++n)
                for (int64_t i = 0; i < win->grad.numel(); ++i)
                    win->grad[i] += gw_parts[static_cast<size_t>(n)][i];
        if (bin->requires_grad)
            for (int64_t n = 0; n < N; ++n)
                for (int64_t c = 0; c < Cout; ++c) {
                    const T* g = node.grad.data() + (n * Cout + c) * OHW;
                    double acc = 0;
                    for (int64_t i = 0; i < OHW; ++i) acc += static_cast<double>(g[i]);
                    bin->grad[c] += static_cast<T>(acc);
                }
    };
    return make_op<T>("conv3d", std::move(out), {x, w, b}, bw);
}

// ---------------------------------------------------------------------------
// Instance normalization over [N,C,H,W] with affine parameters.
// ---------------------------------------------------------------------------

template <typename T>
Var<T> instance_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps = T(1e-5)) {
    const auto& s = x->value.shape();
    if (s.size() != 4) throw ArgumentError("instance_norm: expects [N,C,H,W]");
    const int64_t N = s[0], C = s[1], HW = s[2] * s[3];
    if (gamma->value.numel() != C || beta->value.numel() != C)
        throw ArgumentError("instance_norm: affine size mismatch");
    Tensor<T> out(s);
    auto xhat = std::make_shared<Tensor<T>>(s);
    auto istd = std::make_shared<Tensor<T>>(Tensor<T>({N, C}));
    for (int64_t n = 0; n < N; ++n) {
        for (int64_t c = 0; c < C; ++c) {
            const T* in = x->value.data() + (n * C + c) * HW;
            T* o = out.data() + (n * C + c) * HW;
            T* xh = xhat->data() + (n * C + c) * HW;
            double mu = 0;
            for (int64_t i = 0; i < HW; ++i) mu += static_cast<double>(in[i]);
            mu /= static_cast<double>(HW);
            double var = 0;
            for (int64_t i = 0; i < HW; ++i) {
                const double d = static_cast<double>(in[i]) - mu;
                var += d * d;
            }
            var /= static_cast<double>(HW);
            const double is = 1.0 / std::sqrt(var + static_cast<double>(eps));
            (*istd)[n * C + c] = static_cast<T>(is);
            const T g = gamma->value[c], bta = beta->value[c];
            for (int64_t i = 0; i < HW; ++i) {
                const T h = static_cast<T>((static_cast<double>(in[i]) - mu) * is);
                xh[i] = h;
                o[i] = g * h + bta;
            }
        }
    }
    auto bw = [N, C, HW, xhat, istd](Node<T>& node) {
        auto& xin = node.inputs[0];
        auto& gin = node.inputs[1];
        auto& bin = node.inputs[2];
        if (gin->requires_grad) {
            auto& gg = gin->ensure_grad();
            for (int64_t n = 0; n < N; ++n)
                for (int64_t c = 0; c < C; ++c) {
                    const T* gy = node.grad.data() + (n * C + c) * HW;
                    const T* xh = xhat->data() + (n * C + c) * HW;
                    double acc = 0;
                    for (int64_t i = 0; i < HW; ++i)
                        acc += static_cast<double>(gy[i]) * static_cast<double>(xh[i]);
                    gg[c] += static_cast<T>(acc);
                }
        }
        if (bin->requires_grad) {
            auto& gb = bin->ensure_grad();
            for (int64_t n = 0; n < N; ++n)
                for (int64_t c = 0; c < C; ++c) {
                    const T* gy = node.grad.data() + (n * C + c) * HW;
                    double acc = 0;
                    for (int64_t i = 0; i < HW; ++i) acc += static_cast<double>(gy[i]);
                    gb[c] += static_cast<T>(acc);
                }
        }
        if (xin->requires_grad) {
            auto& gx = xin->ensure_grad();
            for (int64_t n = 0; n < N; ++n)
                for (int64_t c = 0; c < C; ++c) {
                    const T* gy = node.grad.data() + (n * C + c) * HW;
                    const T* xh = xhat->data() + (n * C + c) * HW;
                    T* g = gx.data() + (n * C + c) * HW;
                    const double gam = static_cast<double>(node.inputs[1]->value[c]);
                    const double is = static_cast<double>((*istd)[n * C + c]);
                    double mg = 0, mgx = 0;
                    for (int64_t i = 0; i < HW; ++i) {
                        mg += static_cast<double>(gy[i]);
                        mgx += static_cast<double>(gy[i]) * static_cast<double>(xh[i]);
                    }
                    mg /= static_cast<double>(HW);
                    mgx /= static_cast<double>(HW);
                    for (int64_t i = 0; i < HW; ++i)
                        g[i] += static_cast<T>(gam * is *
                                               (static_cast<double>(gy[i]) - mg -
                                                static_cast<double>(xh[i]) * mgx));
                }
        }
    };
    return make_op<T>("instance_norm", std::move(out), {x, gamma, beta}, bw);
}

// ---------------------------------------------------------------------------
// Warping ops (batched wrappers over the raw kernels).
// ---------------------------------------------------------------------------

// x [N,C,H,W], flow offsets [N,2,H,W]
template <typename T>
Var<T> grid_sample_2d_op(const Var<T>& x, const Var<T>& flow, Padding pad) {
    const auto& xs = x->value.shape();
    const auto& fs = flow->value.shape();
    if (xs.size() != 4 || fs.size() != 4 || fs[1] != 2)
        throw ArgumentError("grid_sample_2d_op: bad shapes");
    if (xs[0] != fs[0] || xs[2] != fs[2] || xs[3] != fs[3])
        throw ArgumentError("grid_sample_2d_op: resolution mismatch");
    const int64_t N = xs[0], C = xs[1], H = xs[2], W = xs[3];
    Tensor<T> out(xs);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int64_t n = 0; n < N; ++n)
        gs2d_forward_raw(x->value.data() + n * C * H * W, C, H, W,
                         flow->value.data() + n * 2 * H * W, pad, out.data() + n * C * H * W);
    auto bw = [N, C, H, W, pad](Node<T>& node) {
        auto& xin = node.inputs[0];
        auto& fin = node.inputs[1];
        T* gx = xin->requires_grad ? xin->ensure_grad().data() : nullptr;
        T* gf = fin->requires_grad ? fin->ensure_grad().data() : nullptr;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (int64_t n = 0; n < N; ++n)
            gs2d_backward_raw(xin->value.data() + n * C * H * W, C, H, W,
                              fin->value.data() + n * 2 * H * W, pad,
                              node.grad.data() + n * C * H * W,
                              gx ? gx + n * C * H * W : nullptr,
                              gf ? gf + n * 2 * H * W : nullptr);
    };
    return make_op<T>("grid_sample_2d", std::move(out), {x, flow}, bw);
}

// vol [N,C,2,H,W], coords [N,3,2,H,W]
template <typename T>
Var<T> grid_sample_3d_op(const Var<T>& vol, const Var<T>& coords, Padding pad) {
    const auto& vs = vol->value.shape();
    const auto& cs = coords->value.shape();
    if (vs.size() != 5 || vs[2] != 2 || cs.size() != 5 || cs[1] != 3 || cs[2] != 2)
        throw ArgumentError("grid_sample_3d_op: bad shapes");
    if (vs[0] != cs[0] || vs[3] != cs[3] || vs[4] != cs[4])
        throw ArgumentError("grid_sample_3d_op: resolution mismatch");
    const int64_t N = vs[0], C = vs[1], H = vs[3], W = vs[4];
    Tensor<T> out(vs);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int64_t n = 0; n < N; ++n)
        gs3d_forward_raw(vol->value.data() + n * C * 2 * H * W, C, H, W,
                         coords->value.data() + n * 6 * H * W, pad,
                         out.data() + n * C * 2 * H * W);
    auto bw = [N, C, H, W, pad](Node<T>& node) {
        auto& vin = node.inputs[0];
        auto& cin = node.inputs[1];
        T* gv = vin->requires_grad ? vin->ensure_grad().data() : nullptr;
        T* gc = cin->requires_grad ? cin->ensure_grad().data() : nullptr;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (int64_t n = 0; n < N; ++n)
            gs3d_backward_raw(vin->value.data() + n * C * 2 * H * W, C, H, W,
                              cin->value.data() + n * 6 * H * W, pad,
                              node.grad.data() + n * C * 2 * H * W,
                              gv ? gv + n * C * 2 * H * W : nullptr,
                              gc ? gc + n * 6 * H * W : nullptr);
    };
    return make_op<T>("grid_sample_3d", std::move(out), {vol, coords}, bw);
}

// [N,C,H,W] -> [N,C,fH,fW]
template <typename T>
Var<T> upsample_bilinear(const Var<T>& x, int64_t factor) {
    if (factor < 1) throw ArgumentError("upsample_bilinear: factor must be >= 1");
    if (factor == 1) return x;
    const auto& s = x->value.shape();
    if (s.size() != 4) throw ArgumentError("upsample_bilinear: expects [N,C,H,W]");
    const int64_t N = s[0], C = s[1], H = s[2], W = s[3];
    Tensor<T> out({N, C, H * factor, W * factor});
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int64_t n = 0; n < N; ++n)
        upsample_bilinear_raw(x->value.data() + n * C * H * W, C, H, W, factor,
                              out.data() + n * C * H * W * factor * factor);
    auto bw = [N, C, H, W, factor](Node<T>& node) {
        auto& xin = node.inputs[0];
        auto& g = xin->ensure_grad();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (int64_t n = 0; n < N; ++n)
            upsample_bilinear_backward_raw(C, H, W, factor,
                                           node.grad.data() + n * C * H * W * factor * factor,
                                           g.data() + n * C * H * W);
    };
    return make_op<T>("upsample", std::move(out), {x}, bw);
}

// [N,C,H,W] -> [N,C,2,H,W], depth 1 zero-filled (the paper's <.,O> operator).
template <typename T>
Var<T> stack_zero_depth_op(const Var<T>& x) {
    const auto& s = x->value.shape();
    if (s.size() != 4) throw ArgumentError("stack_zero_depth_op: expects [N,C,H,W]");
    const int64_t N = s[0], C = s[1], HW = s[2] * s[3];
    Tensor<T> out({N, C, 2, s[2], s[3]});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c)
            std::memcpy(out.data() + ((n * C + c) * 2) * HW, x->value.data() + (n * C + c) * HW,
                        sizeof(T) * static_cast<size_t>(HW));
    auto bw = [N, C, HW](Node<T>& node) {
        auto& g = node.inputs[0]->ensure_grad();
        for (int64_t n = 0; n < N; ++n)
            for (int64_t c = 0; c < C; ++c) {
                const T* src = node.grad.data() + ((n * C + c) * 2) * HW;
                T* dst = g.data() + (n * C + c) * HW;
                for (int64_t i = 0; i < HW; ++i) dst[i] += src[i];
            }
    };
    return make_op<T>("stack_zero_depth", std::move(out), {x}, bw);
}

// Take depth slice d of [N,C,2,H,W] -> [N,C,H,W].
template <typename T>
Var<T> take_depth(const Var<T>& x, int64_t d) {
    const auto& s = x->value.shape();
    if (s.size() != 5 || s[2] != 2 || d < 0 || d > 1) throw ArgumentError("take_depth: bad args");
    const int64_t N = s[0], C = s[1], HW = s[3] * s[4];
    Tensor<T> out({N, C, s[3], s[4]});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c)
            std::memcpy(out.data() + (n * C + c) * HW,
                        x->value.data() + ((n * C + c) * 2 + d) * HW,
                        sizeof(T) * static_cast<size_t>(HW));
    auto bw = [N, C, HW, d](Node<T>& node) {
        auto& g = node.inputs[0]->ensure_grad();
        for (int64_t n = 0; n < N; ++n)
            for (int64_t c = 0; c < C; ++c) {
                const T* src = node.grad.data() + (n * C + c) * HW;
                T* dst = g.data() + ((n * C + c) * 2 + d) * HW;
                for (int64_t i = 0; i < HW; ++i) dst[i] += src[i];
            }
    };
    return make_op<T>("take_depth", std::move(out), {x}, bw);
}

// Average pooling by integer factor (area downsampling), used by the frozen
// perceptual stack and mask pyramids.
template <typename T>
Var<T> avg_pool(const Var<T>& x, int64_t factor) {
    if (factor < 1) throw ArgumentError("avg_pool: factor must be >= 1");
    if (factor == 1) return x;
    const auto& s = x->value.shape();
    if (s.size() != 4 || s[2] % factor != 0 || s[3] % factor != 0)
        throw ArgumentError("avg_pool: resolution not divisible by factor");
    const int64_t N = s[0], C = s[1], H = s[2], W = s[3];
    const int64_t OH = H / factor, OW = W / factor;
    const double inv = 1.0 / static_cast<double>(factor * factor);
    Tensor<T> out({N, C, OH, OW});
    for (int64_t nc = 0; nc < N * C; ++nc) {
        const T* in = x->value.data() + nc * H * W;
        T* o = out.data() + nc * OH * OW;
        for (int64_t oy = 0; oy < OH; ++oy)
            for (int64_t ox = 0; ox < OW; ++ox) {
                double acc = 0;
                for (int64_t dy = 0; dy < factor; ++dy)
                    for (int64_t dx = 0; dx < factor; ++dx)
                        acc += static_cast<double>(in[(oy * factor + dy) * W + ox * factor + dx]);
                o[oy * OW + ox] = static_cast<T>(acc * inv);
            }
    }
    auto bw = [N, C, H, W, OH, OW, factor, inv](Node<T>& node) {
        auto& g = node.inputs[0]->ensure_grad();
        for (int64_t nc = 0; nc < N * C; ++nc) {
            const T* go = node.grad.data() + nc * OH * OW;
            T* gi = g.data() + nc * H * W;
            for (int64_t oy = 0; oy < OH; ++oy)
                for (int64_t ox = 0; ox < OW; ++ox) {
                    const T v = static_cast<T>(static_cast<double>(go[oy * OW + ox]) * inv);
                    for (int64_t dy = 0; dy < factor; ++dy)
                        for (int64_t dx = 0; dx < factor; ++dx)
                            gi[(oy * factor + dy) * W + ox * factor + dx] += v;
                }
        }
    };
    return make_op<T>("avg_pool", std::move(out), {x}, bw);
}

}  // namespace sdwarp
