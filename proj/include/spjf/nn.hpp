#pragma once

// Differentiable ops over Graph<T>. Convolutions take weights laid out
// [kh, kw, cin, cout] (depthwise: [kh, kw, 1, c]) so the innermost loop runs
// over output channels. Reflect padding is its own node; "same" convolutions
// compose pad + valid conv.

#include <memory>

#include "spjf/fourier.hpp"
#include "spjf/graph.hpp"
#include "spjf/haar.hpp"
#include "spjf/sobel.hpp"

namespace spjf {

// ---------------------------------------------------------------- elementwise

template <class T>
int op_add(Graph<T>& g, int a, int b) {
    if (!g.val(a).same_shape(g.val(b)))
        throw std::invalid_argument("op_add: shape mismatch " + g.val(a).shape_str() + " vs " +
                                    g.val(b).shape_str());
    TensorT<T> out = g.val(a);
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += g.val(b).v[i];
    bool needs = g.needs(a) || g.needs(b);
    return g.add_node(std::move(out), needs, [a, b](Graph<T>& g, int self) {
        const auto& d = g.grad_of(self);
        if (g.needs(a)) {
            auto& da = g.grad_acc(a);
            for (size_t i = 0; i < d.v.size(); ++i) da.v[i] += d.v[i];
        }
        if (g.needs(b)) {
            auto& db = g.grad_acc(b);
            for (size_t i = 0; i < d.v.size(); ++i) db.v[i] += d.v[i];
        }
    });
}

template <class T>
int op_sub(Graph<T>& g, int a, int b) {
    if (!g.val(a).same_shape(g.val(b))) throw std::invalid_argument("op_sub: shape mismatch");
    TensorT<T> out = g.val(a);
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] -= g.val(b).v[i];
    bool needs = g.needs(a) || g.needs(b);
    return g.add_node(std::move(out), needs, [a, b](Graph<T>& g, int self) {
        const auto& d = g.grad_of(self);
        if (g.needs(a)) {
            auto& da = g.grad_acc(a);
            for (size_t i = 0; i < d.v.size(); ++i) da.v[i] += d.v[i];
        }
        if (g.needs(b)) {
            auto& db = g.grad_acc(b);
            for (size_t i = 0; i < d.v.size(); ++i) db.v[i] -= d.v[i];
        }
    });
}

template <class T>
int op_mul(Graph<T>& g, int a, int b) {
    if (!g.val(a).same_shape(g.val(b))) throw std::invalid_argument("op_mul: shape mismatch");
    TensorT<T> out = g.val(a);
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] *= g.val(b).v[i];
    bool needs = g.needs(a) || g.needs(b);
    return g.add_node(std::move(out), needs, [a, b](Graph<T>& g, int self) {
        const auto& d = g.grad_of(self);
        if (g.needs(a)) {
            auto& da = g.grad_acc(a);
            const auto& bv = g.val(b);
            for (size_t i = 0; i < d.v.size(); ++i) da.v[i] += d.v[i] * bv.v[i];
        }
        if (g.needs(b)) {
            auto& db = g.grad_acc(b);
            const auto& av = g.val(a);
            for (size_t i = 0; i < d.v.size(); ++i) db.v[i] += d.v[i] * av.v[i];
        }
    });
}

template <class T>
int op_scale(Graph<T>& g, int a, double k) {
    TensorT<T> out = g.val(a);
    for (auto& x : out.v) x = T(x * k);
    return g.add_node(std::move(out), g.needs(a), [a, k](Graph<T>& g, int self) {
        if (!g.needs(a)) return;
        const auto& d = g.grad_of(self);
        auto& da = g.grad_acc(a);
        for (size_t i = 0; i < d.v.size(); ++i) da.v[i] += T(d.v[i] * k);
    });
}

// x * s with s per-channel [1,1,1,c]
template <class T>
int op_mul_channel(Graph<T>& g, int x, int s) {
    const auto& xv = g.val(x);
    const auto& sv = g.val(s);
    if (sv.h != 1 || sv.w != 1 || sv.c != xv.c)
        throw std::invalid_argument("op_mul_channel: scale must be [1,1,1,c]");
    TensorT<T> out = xv;
    const int c = xv.c;
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] *= sv.v[i % c];
    bool needs = g.needs(x) || g.needs(s);
    return g.add_node(std::move(out), needs, [x, s](Graph<T>& g, int self) {
        const auto& d = g.grad_of(self);
        const int c = g.val(x).c;
        if (g.needs(x)) {
            auto& dx = g.grad_acc(x);
            const auto& sv = g.val(s);
            for (size_t i = 0; i < d.v.size(); ++i) dx.v[i] += d.v[i] * sv.v[i % c];
        }
        if (g.needs(s)) {
            auto& ds = g.grad_acc(s);
            const auto& xv = g.val(x);
            for (size_t i = 0; i < d.v.size(); ++i) ds.v[i % c] += d.v[i] * xv.v[i];
        }
    });
}

// x * m with m a single-channel spatial map [1,h,w,1] broadcast over channels
template <class T>
int op_mul_spatial(Graph<T>& g, int x, int m) {
    const auto& xv = g.val(x);
    const auto& mv = g.val(m);
    if (mv.h != xv.h || mv.w != xv.w || mv.c != 1)
        throw std::invalid_argument("op_mul_spatial: map must be [1,h,w,1]");
    TensorT<T> out = xv;
    for (int y = 0; y < xv.h; ++y)
        for (int xx = 0; xx < xv.w; ++xx) {
            T s = mv.at(y, xx, 0);
            for (int ch = 0; ch < xv.c; ++ch) out.at(y, xx, ch) *= s;
        }
    bool needs = g.needs(x) || g.needs(m);
    return g.add_node(std::move(out), needs, [x, m](Graph<T>& g, int self) {
        const auto& d = g.grad_of(self);
        const auto& xv = g.val(x);
        const auto& mv = g.val(m);
        if (g.needs(x)) {
            auto& dx = g.grad_acc(x);
            for (int y = 0; y < xv.h; ++y)
                for (int xx = 0; xx < xv.w; ++xx) {
                    T s = mv.at(y, xx, 0);
                    for (int ch = 0; ch < xv.c; ++ch) dx.at(y, xx, ch) += d.at(y, xx, ch) * s;
                }
        }
        if (g.needs(m)) {
            auto& dm = g.grad_acc(m);
            for (int y = 0; y < xv.h; ++y)
                for (int xx = 0; xx < xv.w; ++xx) {
                    T acc = 0;
                    for (int ch = 0; ch < xv.c; ++ch) acc += d.at(y, xx, ch) * xv.at(y, xx, ch);
                    dm.at(y, xx, 0) += acc;
                }
        }
    });
}

template <class T>
int op_sigmoid(Graph<T>& g, int a) {
    TensorT<T> out = g.val(a);
    for (auto& x : out.v) x = T(1.0 / (1.0 + std::exp(-double(x))));
    return g.add_node(std::move(out), g.needs(a), [a](Graph<T>& g, int self) {
        if (!g.needs(a)) return;
        const auto& d = g.grad_of(self);
        const auto& y = g.val(self);
        auto& da = g.grad_acc(a);
        for (size_t i = 0; i < d.v.size(); ++i) da.v[i] += d.v[i] * y.v[i] * (T(1) - y.v[i]);
    });
}

// x * sigmoid(x); smooth activation keeps finite-difference checks clean
template <class T>
int op_silu(Graph<T>& g, int a) {
    TensorT<T> out = g.val(a);
    for (auto& x : out.v) {
        double s = 1.0 / (1.0 + std::exp(-double(x)));
        x = T(double(x) * s);
    }
    return g.add_node(std::move(out), g.needs(a), [a](Graph<T>& g, int self) {
        if (!g.needs(a)) return;
        const auto& d = g.grad_of(self);
        const auto& xv = g.val(a);
        auto& da = g.grad_acc(a);
        for (size_t i = 0; i < d.v.size(); ++i) {
            double s = 1.0 / (1.0 + std::exp(-double(xv.v[i])));
            da.v[i] += T(double(d.v[i]) * s * (1.0 + double(xv.v[i]) * (1.0 - s)));
        }
    });
}

template <class T>
int op_clamp(Graph<T>& g, int a, double lo, double hi) {
    TensorT<T> out = g.val(a);
    for (auto& x : out.v) x = T(std::min(hi, std::max(lo, double(x))));
    return g.add_node(std::move(out), g.needs(a), [a, lo, hi](Graph<T>& g, int self) {
        if (!g.needs(a)) return;
        const auto& d = g.grad_of(self);
        const auto& xv = g.val(a);
        auto& da = g.grad_acc(a);
        for (size_t i = 0; i < d.v.size(); ++i)
            if (double(xv.v[i]) > lo && double(xv.v[i]) < hi) da.v[i] += d.v[i];
    });
}

// sqrt with zero subgradient at zero (gradient magnitude stays bounded when
// composed as sqrt(gx^2+gy^2))
template <class T>
int op_sqrt_safe(Graph<T>& g, int a) {
    TensorT<T> out = g.val(a);
    for (auto& x : out.v) x = T(std::sqrt(std::max(0.0, double(x))));
    return g.add_node(std::move(out), g.needs(a), [a](Graph<T>& g, int self) {
        if (!g.needs(a)) return;
        const auto& d = g.grad_of(self);
        const auto& y = g.val(self);
        auto& da = g.grad_acc(a);
        for (size_t i = 0; i < d.v.size(); ++i)
            if (y.v[i] > T(0)) da.v[i] += d.v[i] / (T(2) * y.v[i]);
    });
}

// x^gamma with x > 0 elementwise and gamma per-channel [1,1,1,c]
template <class T>
int op_pow_channel(Graph<T>& g, int x, int gamma) {
    const auto& xv = g.val(x);
    const auto& gv = g.val(gamma);
    if (gv.h != 1 || gv.w != 1 || gv.c != xv.c)
        throw std::invalid_argument("op_pow_channel: gamma must be [1,1,1,c]");
    TensorT<T> out = xv;
    const int c = xv.c;
    for (size_t i = 0; i < out.v.size(); ++i) {
        if (!(out.v[i] > T(0)))
            throw std::invalid_argument("op_pow_channel: base must be positive");
        out.v[i] = T(std::pow(double(out.v[i]), double(gv.v[i % c])));
    }
    bool needs = g.needs(x) || g.needs(gamma);
    return g.add_node(std::move(out), needs, [x, gamma](Graph<T>& g, int self) {
        const auto& d = g.grad_of(self);
        const auto& xv = g.val(x);
        const auto& gv = g.val(gamma);
        const auto& yv = g.val(self);
        const int c = xv.c;
        if (g.needs(x)) {
            auto& dx = g.grad_acc(x);
            for (size_t i = 0; i < d.v.size(); ++i) {
                double gc = double(gv.v[i % c]);
                dx.v[i] += T(double(d.v[i]) * gc * double(yv.v[i]) / double(xv.v[i]));
            }
        }
        if (g.needs(gamma)) {
            auto& dg = g.grad_acc(gamma);
            for (size_t i = 0; i < d.v.size(); ++i)
                dg.v[i % c] += T(double(d.v[i]) * double(yv.v[i]) * std::log(double(xv.v[i])));
        }
    });
}

// ------------------------------------------------------------- shape plumbing

template <class T>
int op_concat_c(Graph<T>& g, const std::vector<int>& parts) {
    if (parts.empty()) throw std::invalid_argument("op_concat_c: empty input");
    const auto& p0 = g.val(parts[0]);
    int ctot = 0;
    for (int p : parts) {
        const auto& pv = g.val(p);
        if (pv.h != p0.h || pv.w != p0.w)
            throw std::invalid_argument("op_concat_c: spatial shape mismatch");
        ctot += pv.c;
    }
    TensorT<T> out(p0.h, p0.w, ctot);
    int off = 0;
    bool needs = false;
    for (int p : parts) {
        const auto& pv = g.val(p);
        needs = needs || g.needs(p);
        for (int y = 0; y < pv.h; ++y)
            for (int xx = 0; xx < pv.w; ++xx)
                for (int ch = 0; ch < pv.c; ++ch) out.at(y, xx, off + ch) = pv.at(y, xx, ch);
        off += pv.c;
    }
    return g.add_node(std::move(out), needs, [parts](Graph<T>& g, int self) {
        const auto& d = g.grad_of(self);
        int off = 0;
        for (int p : parts) {
            const auto& pv = g.val(p);
            if (g.needs(p)) {
                auto& dp = g.grad_acc(p);
                for (int y = 0; y < pv.h; ++y)
                    for (int xx = 0; xx < pv.w; ++xx)
                        for (int ch = 0; ch < pv.c; ++ch)
                            dp.at(y, xx, ch) += d.at(y, xx, off + ch);
            }
            off += pv.c;
        }
    });
}

template <class T>
int op_slice_c(Graph<T>& g, int a, int from, int count) {
    const auto& av = g.val(a);
    if (from < 0 || from + count > av.c) throw std::invalid_argument("op_slice_c: out of range");
    TensorT<T> out(av.h, av.w, count);
    for (int y = 0; y < av.h; ++y)
        for (int xx = 0; xx < av.w; ++xx)
            for (int ch = 0; ch < count; ++ch) out.at(y, xx, ch) = av.at(y, xx, from + ch);
    return g.add_node(std::move(out), g.needs(a), [a, from, count](Graph<T>& g, int self) {
        if (!g.needs(a)) return;
        const auto& d = g.grad_of(self);
        auto& da = g.grad_acc(a);
        for (int y = 0; y < d.h; ++y)
            for (int xx = 0; xx < d.w; ++xx)
                for (int ch = 0; ch < count; ++ch) da.at(y, xx, from + ch) += d.at(y, xx, ch);
    });
}

template <class T>
int op_pad_reflect(Graph<T>& g, int a, int pad) {
    const auto& av = g.val(a);
    TensorT<T> out(av.h + 2 * pad, av.w + 2 * pad, av.c);
    for (int y = 0; y < out.h; ++y) {
        int sy = reflect_index(y - pad, av.h);
        for (int xx = 0; xx < out.w; ++xx) {
            int sx = reflect_index(xx - pad, av.w);
            for (int ch = 0; ch < av.c; ++ch) out.at(y, xx, ch) = av.at(sy, sx, ch);
        }
    }
    return g.add_node(std::move(out), g.needs(a), [a, pad](Graph<T>& g, int self) {
        if (!g.needs(a)) return;
        const auto& d = g.grad_of(self);
        auto& da = g.grad_acc(a);
        const int h = da.h, w = da.w;
        for (int y = 0; y < d.h; ++y) {
            int sy = reflect_index(y - pad, h);
            for (int xx = 0; xx < d.w; ++xx) {
                int sx = reflect_index(xx - pad, w);
                for (int ch = 0; ch < d.c; ++ch) da.at(sy, sx, ch) += d.at(y, xx, ch);
            }
        }
    });
}

// ---------------------------------------------------------------- convolution

// Valid dense convolution (cross-correlation). w: [kh,kw,cin,cout], b: [1,1,1,cout] or -1.
template <class T>
int op_conv_valid(Graph<T>& g, int x, int w, int b, int dilation = 1) {
    const auto& xv = g.val(x);
    const auto& wv = g.val(w);
    const int kh = wv.n, kw = wv.h, cin = wv.w, cout = wv.c;
    if (xv.c != cin)
        throw std::invalid_argument("op_conv_valid: input channels " + std::to_string(xv.c) +
                                    " != kernel cin " + std::to_string(cin));
    const int oh = xv.h - (kh - 1) * dilation, ow = xv.w - (kw - 1) * dilation;
    if (oh <= 0 || ow <= 0) throw std::invalid_argument("op_conv_valid: kernel exceeds input");
    TensorT<T> out(oh, ow, cout);
    std::vector<T> acc(static_cast<size_t>(cout));
    const T* bias = b >= 0 ? g.val(b).v.data() : nullptr;
    for (int y = 0; y < oh; ++y) {
        for (int xx = 0; xx < ow; ++xx) {
            if (bias)
                std::copy(bias, bias + cout, acc.begin());
            else
                std::fill(acc.begin(), acc.end(), T(0));
            for (int ky = 0; ky < kh; ++ky) {
                const T* inr = xv.row(y + ky * dilation);
                for (int kx = 0; kx < kw; ++kx) {
                    const T* inp = inr + size_t(xx + kx * dilation) * cin;
                    const T* wp = &wv.at4(ky, kx, 0, 0);
                    for (int ci = 0; ci < cin; ++ci) {
                        T iv = inp[ci];
                        const T* wr = wp + size_t(ci) * cout;
                        for (int co = 0; co < cout; ++co) acc[size_t(co)] += iv * wr[co];
                    }
                }
            }
            std::copy(acc.begin(), acc.end(), &out.at(y, xx, 0));
        }
    }
    bool needs = g.needs(x) || g.needs(w) || (b >= 0 && g.needs(b));
    return g.add_node(std::move(out), needs, [x, w, b, dilation](Graph<T>& g, int self) {
        const auto& d = g.grad_of(self);
        const auto& xv = g.val(x);
        const auto& wv = g.val(w);
        const int kh = wv.n, kw = wv.h, cin = wv.w, cout = wv.c;
        const bool nx = g.needs(x), nw = g.needs(w);
        TensorT<T>* dx = nx ? &g.grad_acc(x) : nullptr;
        TensorT<T>* dw = nw ? &g.grad_acc(w) : nullptr;
        if (b >= 0 && g.needs(b)) {
            auto& db = g.grad_acc(b);
            for (int y = 0; y < d.h; ++y)
                for (int xx = 0; xx < d.w; ++xx)
                    for (int co = 0; co < cout; ++co) db.v[size_t(co)] += d.at(y, xx, co);
        }
        if (!nx && !nw) return;
        for (int y = 0; y < d.h; ++y) {
            for (int xx = 0; xx < d.w; ++xx) {
                const T* dout = &d.at(y, xx, 0);
                for (int ky = 0; ky < kh; ++ky) {
                    for (int kx = 0; kx < kw; ++kx) {
                        const size_t ipix =
                            (size_t(y + ky * dilation) * xv.w + (xx + kx * dilation)) *
                            size_t(cin);
                        const T* inp = xv.v.data() + ipix;
                        const T* wp = &wv.at4(ky, kx, 0, 0);
                        T* dwp = dw ? &dw->at4(ky, kx, 0, 0) : nullptr;
                        T* dxp = dx ? dx->v.data() + ipix : nullptr;
                        for (int ci = 0; ci < cin; ++ci) {
                            const T* wr = wp + size_t(ci) * cout;
                            T s = 0;
                            if (dwp) {
                                T iv = inp[ci];
                                T* dwr = dwp + size_t(ci) * cout;
                                for (int co = 0; co < cout; ++co) {
                                    dwr[co] += iv * dout[co];
                                    s += wr[co] * dout[co];
                                }
                            } else {
                                for (int co = 0; co < cout; ++co) s += wr[co] * dout[co];
                            }
                            if (dxp) dxp[ci] += s;
                        }
                    }
                }
            }
        }
    });
}

// Valid depthwise convolution. w: [kh,kw,1,c].
template <class T>
int op_dwconv_valid(Graph<T>& g, int x, int w, int b, int dilation = 1) {
    const auto& xv = g.val(x);
    const auto& wv = g.val(w);
    const int kh = wv.n, kw = wv.h, c = wv.c;
    if (wv.w != 1 || xv.c != c)
        throw std::invalid_argument("op_dwconv_valid: kernel must be [kh,kw,1,c] matching input");
    const int oh = xv.h - (kh - 1) * dilation, ow = xv.w - (kw - 1) * dilation;
    if (oh <= 0 || ow <= 0) throw std::invalid_argument("op_dwconv_valid: kernel exceeds input");
    TensorT<T> out(oh, ow, c);
    const T* bias = b >= 0 ? g.val(b).v.data() : nullptr;
    for (int y = 0; y < oh; ++y)
        for (int xx = 0; xx < ow; ++xx) {
            T* op = &out.at(y, xx, 0);
            if (bias)
                std::copy(bias, bias + c, op);
            for (int ky = 0; ky < kh; ++ky)
                for (int kx = 0; kx < kw; ++kx) {
                    const T* inp = &xv.at(y + ky * dilation, xx + kx * dilation, 0);
                    const T* wp = &wv.at4(ky, kx, 0, 0);
                    for (int ch = 0; ch < c; ++ch) op[ch] += inp[ch] * wp[ch];
                }
        }
    bool needs = g.needs(x) || g.needs(w) || (b >= 0 && g.needs(b));
    return g.add_node(std::move(out), needs, [x, w, b, dilation](Graph<T>& g, int self) {
        const auto& d = g.grad_of(self);
        const auto& xv = g.val(x);
        const auto& wv = g.val(w);
        const int kh = wv.n, kw = wv.h, c = wv.c;
        TensorT<T>* dx = g.needs(x) ? &g.grad_acc(x) : nullptr;
        TensorT<T>* dw = g.needs(w) ? &g.grad_acc(w) : nullptr;
        if (b >= 0 && g.needs(b)) {
            auto& db = g.grad_acc(b);
            for (int y = 0; y < d.h; ++y)
                for (int xx = 0; xx < d.w; ++xx)
                    for (int ch = 0; ch < c; ++ch) db.v[size_t(ch)] += d.at(y, xx, ch);
        }
        if (!dx && !dw) return;
        for (int y = 0; y < d.h; ++y)
            for (int xx = 0; xx < d.w; ++xx) {
                const T* dout = &d.at(y, xx, 0);
                for (int ky = 0; ky < kh; ++ky)
                    for (int kx = 0; kx < kw; ++kx) {
                        const int iy = y + ky * dilation, ix = xx + kx * dilation;
                        const T* inp = &xv.at(iy, ix, 0);
                        const T* wp = &wv.at4(ky, kx, 0, 0);
                        if (dw) {
                            T* dwp = &dw->at4(ky, kx, 0, 0);
                            for (int ch = 0; ch < c; ++ch) dwp[ch] += inp[ch] * dout[ch];
                        }
                        if (dx) {
                            T* dxp = &dx->at(iy, ix, 0);
                            for (int ch = 0; ch < c; ++ch) dxp[ch] += wp[ch] * dout[ch];
                        }
                    }
            }
    });
}

// Shape-preserving convolution: reflect pad then valid conv.
template <class T>
int op_conv_same(Graph<T>& g, int x, int w, int b, int dilation = 1) {
    const auto& wv = g.val(w);
    const int pad = ((wv.n - 1) / 2) * dilation;
    int xp = pad > 0 ? op_pad_reflect(g, x, pad) : x;
    return op_conv_valid(g, xp, w, b, dilation);
}

template <class T>
int op_dwconv_same(Graph<T>& g, int x, int w, int b, int dilation = 1) {
    const auto& wv = g.val(w);
    const int pad = ((wv.n - 1) / 2) * dilation;
    int xp = pad > 0 ? op_pad_reflect(g, x, pad) : x;
    return op_dwconv_valid(g, xp, w, b, dilation);
}

// ------------------------------------------------------------------ reductions

template <class T>
int op_gap(Graph<T>& g, int a) {
    const auto& av = g.val(a);
    TensorT<T> out(1, 1, av.c);
    const double inv = 1.0 / (double(av.h) * av.w);
    for (int y = 0; y < av.h; ++y)
        for (int xx = 0; xx < av.w; ++xx)
            for (int ch = 0; ch < av.c; ++ch) out.v[size_t(ch)] += av.at(y, xx, ch);
    for (auto& x : out.v) x = T(double(x) * inv);
    return g.add_node(std::move(out), g.needs(a), [a](Graph<T>& g, int self) {
        if (!g.needs(a)) return;
        const auto& d = g.grad_of(self);
        auto& da = g.grad_acc(a);
        const double inv = 1.0 / (double(da.h) * da.w);
        for (int y = 0; y < da.h; ++y)
            for (int xx = 0; xx < da.w; ++xx)
                for (int ch = 0; ch < da.c; ++ch) da.at(y, xx, ch) += T(double(d.v[size_t(ch)]) * inv);
    });
}

template <class T>
int op_mean_all(Graph<T>& g, int a) {
    const auto& av = g.val(a);
    double s = 0;
    for (T x : av.v) s += double(x);
    TensorT<T> out(1, 1, 1);
    out.v[0] = T(s / double(av.size()));
    return g.add_node(std::move(out), g.needs(a), [a](Graph<T>& g, int self) {
        if (!g.needs(a)) return;
        const auto& d = g.grad_of(self);
        auto& da = g.grad_acc(a);
        const T k = T(double(d.v[0]) / double(da.size()));
        for (auto& x : da.v) x += k;
    });
}

// mean |a - b|; sign(0) treated as 0
template <class T>
int op_mean_abs_diff(Graph<T>& g, int a, int b) {
    const auto& av = g.val(a);
    const auto& bv = g.val(b);
    if (!av.same_shape(bv)) throw std::invalid_argument("op_mean_abs_diff: shape mismatch");
    double s = 0;
    for (size_t i = 0; i < av.v.size(); ++i) s += std::abs(double(av.v[i]) - double(bv.v[i]));
    TensorT<T> out(1, 1, 1);
    out.v[0] = T(s / double(av.size()));
    bool needs = g.needs(a) || g.needs(b);
    return g.add_node(std::move(out), needs, [a, b](Graph<T>& g, int self) {
        const auto& d = g.grad_of(self);
        const auto& av = g.val(a);
        const auto& bv = g.val(b);
        const T k = T(double(d.v[0]) / double(av.size()));
        TensorT<T>* da = g.needs(a) ? &g.grad_acc(a) : nullptr;
        TensorT<T>* db = g.needs(b) ? &g.grad_acc(b) : nullptr;
        for (size_t i = 0; i < av.v.size(); ++i) {
            double diff = double(av.v[i]) - double(bv.v[i]);
            T sg = diff > 0 ? k : (diff < 0 ? -k : T(0));
            if (da) da->v[i] += sg;
            if (db) db->v[i] -= sg;
        }
    });
}

// mean binary cross-entropy of prediction p against a soft constant target t.
// p is clamped into [eps, 1-eps] inside; gradient is blocked where the clamp
// is active.
template <class T>
int op_bce_mean(Graph<T>& g, int p, int t, double eps = 1e-6) {
    const auto& pv = g.val(p);
    const auto& tv = g.val(t);
    if (!pv.same_shape(tv)) throw std::invalid_argument("op_bce_mean: shape mismatch");
    double s = 0;
    for (size_t i = 0; i < pv.v.size(); ++i) {
        double pc = std::min(1.0 - eps, std::max(eps, double(pv.v[i])));
        double tt = double(tv.v[i]);
        s += -(tt * std::log(pc) + (1.0 - tt) * std::log(1.0 - pc));
    }
    TensorT<T> out(1, 1, 1);
    out.v[0] = T(s / double(pv.size()));
    return g.add_node(std::move(out), g.needs(p), [p, t, eps](Graph<T>& g, int self) {
        if (!g.needs(p)) return;
        const auto& d = g.grad_of(self);
        const auto& pv = g.val(p);
        const auto& tv = g.val(t);
        auto& dp = g.grad_acc(p);
        const double k = double(d.v[0]) / double(pv.size());
        for (size_t i = 0; i < pv.v.size(); ++i) {
            double praw = double(pv.v[i]);
            if (praw <= eps || praw >= 1.0 - eps) continue;
            dp.v[i] += T(k * (praw - double(tv.v[i])) / (praw * (1.0 - praw)));
        }
    });
}

// ------------------------------------------------------- transforms (wrapped)

// One Haar analysis step; output packs [L | HL | LH | HH] along channels.
template <class T>
int op_haar_fwd(Graph<T>& g, int x) {
    const auto& xv = g.val(x);
    WaveletLevelT<T> lv = dwt2(xv);
    const int c = xv.c;
    TensorT<T> out(lv.L.h, lv.L.w, 4 * c);
    for (int y = 0; y < out.h; ++y)
        for (int xx = 0; xx < out.w; ++xx)
            for (int ch = 0; ch < c; ++ch) {
                out.at(y, xx, ch) = lv.L.at(y, xx, ch);
                out.at(y, xx, c + ch) = lv.HL.at(y, xx, ch);
                out.at(y, xx, 2 * c + ch) = lv.LH.at(y, xx, ch);
                out.at(y, xx, 3 * c + ch) = lv.HH.at(y, xx, ch);
            }
    return g.add_node(std::move(out), g.needs(x), [x](Graph<T>& g, int self) {
        if (!g.needs(x)) return;
        // orthonormal involution: adjoint of analysis is synthesis
        const auto& d = g.grad_of(self);
        const int c = d.c / 4;
        WaveletLevelT<T> lv{TensorT<T>(d.h, d.w, c), TensorT<T>(d.h, d.w, c),
                            TensorT<T>(d.h, d.w, c), TensorT<T>(d.h, d.w, c)};
        for (int y = 0; y < d.h; ++y)
            for (int xx = 0; xx < d.w; ++xx)
                for (int ch = 0; ch < c; ++ch) {
                    lv.L.at(y, xx, ch) = d.at(y, xx, ch);
                    lv.HL.at(y, xx, ch) = d.at(y, xx, c + ch);
                    lv.LH.at(y, xx, ch) = d.at(y, xx, 2 * c + ch);
                    lv.HH.at(y, xx, ch) = d.at(y, xx, 3 * c + ch);
                }
        TensorT<T> dx = idwt2(lv);
        auto& da = g.grad_acc(x);
        for (size_t i = 0; i < da.v.size(); ++i) da.v[i] += dx.v[i];
    });
}

// Synthesis from the packed [L | HL | LH | HH] layout.
template <class T>
int op_haar_inv(Graph<T>& g, int packed) {
    const auto& pv = g.val(packed);
    if (pv.c % 4 != 0) throw std::invalid_argument("op_haar_inv: channels not divisible by 4");
    const int c = pv.c / 4;
    WaveletLevelT<T> lv{TensorT<T>(pv.h, pv.w, c), TensorT<T>(pv.h, pv.w, c),
                        TensorT<T>(pv.h, pv.w, c), TensorT<T>(pv.h, pv.w, c)};
    for (int y = 0; y < pv.h; ++y)
        for (int xx = 0; xx < pv.w; ++xx)
            for (int ch = 0; ch < c; ++ch) {
                lv.L.at(y, xx, ch) = pv.at(y, xx, ch);
                lv.HL.at(y, xx, ch) = pv.at(y, xx, c + ch);
                lv.LH.at(y, xx, ch) = pv.at(y, xx, 2 * c + ch);
                lv.HH.at(y, xx, ch) = pv.at(y, xx, 3 * c + ch);
            }
    return g.add_node(idwt2(lv), g.needs(packed), [packed](Graph<T>& g, int self) {
        if (!g.needs(packed)) return;
        const auto& d = g.grad_of(self);
        WaveletLevelT<T> lv = dwt2(d);
        auto& da = g.grad_acc(packed);
        const int c = da.c / 4;
        for (int y = 0; y < da.h; ++y)
            for (int xx = 0; xx < da.w; ++xx)
                for (int ch = 0; ch < c; ++ch) {
                    da.at(y, xx, ch) += lv.L.at(y, xx, ch);
                    da.at(y, xx, c + ch) += lv.HL.at(y, xx, ch);
                    da.at(y, xx, 2 * c + ch) += lv.LH.at(y, xx, ch);
                    da.at(y, xx, 3 * c + ch) += lv.HH.at(y, xx, ch);
                }
    });
}

// DFT amplitude/phase split; output packs [A | P] along channels.
template <class T>
int op_fft_split(Graph<T>& g, int x) {
    const auto& xv = g.val(x);
    auto spec = std::make_shared<std::pair<TensorT<T>, TensorT<T>>>(
        dft2(xv, TensorT<T>(), -1, 1.0));
    const int c = xv.c;
    TensorT<T> out(xv.h, xv.w, 2 * c);
    for (int y = 0; y < xv.h; ++y)
        for (int xx = 0; xx < xv.w; ++xx)
            for (int ch = 0; ch < c; ++ch) {
                double rr = double(spec->first.at(y, xx, ch));
                double ii = double(spec->second.at(y, xx, ch));
                out.at(y, xx, ch) = T(std::sqrt(rr * rr + ii * ii));
                out.at(y, xx, c + ch) = T(std::atan2(ii, rr));
            }
    return g.add_node(std::move(out), g.needs(x), [x, spec](Graph<T>& g, int self) {
        if (!g.needs(x)) return;
        const auto& d = g.grad_of(self);
        const auto& out = g.val(self);
        const int c = d.c / 2;
        TensorT<T> gre(d.h, d.w, c), gim(d.h, d.w, c);
        for (int y = 0; y < d.h; ++y)
            for (int xx = 0; xx < d.w; ++xx)
                for (int ch = 0; ch < c; ++ch) {
                    double a = double(out.at(y, xx, ch));
                    if (a == 0.0) continue;
                    double re = double(spec->first.at(y, xx, ch));
                    double im = double(spec->second.at(y, xx, ch));
                    double dA = double(d.at(y, xx, ch));
                    double dP = double(d.at(y, xx, c + ch));
                    gre.at(y, xx, ch) = T(dA * re / a - dP * im / (a * a));
                    gim.at(y, xx, ch) = T(dA * im / a + dP * re / (a * a));
                }
        auto [dxr, dxi] = dft2(gre, gim, +1, 1.0);
        (void)dxi;
        auto& da = g.grad_acc(x);
        for (size_t i = 0; i < da.v.size(); ++i) da.v[i] += dxr.v[i];
    });
}

// Real part of the normalized inverse DFT of A*exp(iP).
template <class T>
int op_fft_merge(Graph<T>& g, int amp, int pha) {
    const auto& av = g.val(amp);
    const auto& pv = g.val(pha);
    if (!av.same_shape(pv)) throw std::invalid_argument("op_fft_merge: shape mismatch");
    TensorT<T> re = av, im = av;
    for (size_t i = 0; i < re.v.size(); ++i) {
        double a = double(av.v[i]), p = double(pv.v[i]);
        re.v[i] = T(a * std::cos(p));
        im.v[i] = T(a * std::sin(p));
    }
    auto [yr, yi] = dft2(re, im, +1, 1.0 / (double(av.h) * av.w));
    (void)yi;
    bool needs = g.needs(amp) || g.needs(pha);
    return g.add_node(std::move(yr), needs, [amp, pha](Graph<T>& g, int self) {
        const auto& d = g.grad_of(self);
        const auto& av = g.val(amp);
        const auto& pv = g.val(pha);
        auto [gr, gi] = dft2(d, TensorT<T>(), -1, 1.0 / (double(d.h) * d.w));
        TensorT<T>* da = g.needs(amp) ? &g.grad_acc(amp) : nullptr;
        TensorT<T>* dp = g.needs(pha) ? &g.grad_acc(pha) : nullptr;
        for (size_t i = 0; i < av.v.size(); ++i) {
            double cs = std::cos(double(pv.v[i])), sn = std::sin(double(pv.v[i]));
            double grv = double(gr.v[i]), giv = double(gi.v[i]);
            if (da) da->v[i] += T(cs * grv + sn * giv);
            if (dp) dp->v[i] += T(double(av.v[i]) * (-sn * grv + cs * giv));
        }
    });
}

// Sobel gradient magnitude as a fused graph op (fixed kernels, reflect
// borders; zero subgradient where the magnitude vanishes).
template <class T>
int op_sobel(Graph<T>& g, int x) {
    const auto& xv = g.val(x);
    auto fields = std::make_shared<std::pair<TensorT<T>, TensorT<T>>>(
        TensorT<T>(xv.h, xv.w, xv.c), TensorT<T>(xv.h, xv.w, xv.c));
    sobel_xy(xv, fields->first, fields->second);
    TensorT<T> out(xv.h, xv.w, xv.c);
    for (size_t i = 0; i < out.v.size(); ++i) {
        double a = double(fields->first.v[i]), b = double(fields->second.v[i]);
        out.v[i] = T(std::sqrt(a * a + b * b));
    }
    return g.add_node(std::move(out), g.needs(x), [x, fields](Graph<T>& g, int self) {
        if (!g.needs(x)) return;
        const auto& d = g.grad_of(self);
        const auto& mag = g.val(self);
        auto& dx = g.grad_acc(x);
        const int h = d.h, w = d.w, c = d.c;
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx)
                for (int ch = 0; ch < c; ++ch) {
                    T m = mag.at(y, xx, ch);
                    if (m <= T(0)) continue;
                    double k = double(d.at(y, xx, ch)) / double(m);
                    double dgx = k * double(fields->first.at(y, xx, ch));
                    double dgy = k * double(fields->second.at(y, xx, ch));
                    for (int dy = -1; dy <= 1; ++dy) {
                        int sy = reflect_index(y + dy, h);
                        for (int dxx = -1; dxx <= 1; ++dxx) {
                            int sx = reflect_index(xx + dxx, w);
                            dx.at(sy, sx, ch) +=
                                T(dgx * kSobelX[dy + 1][dxx + 1] + dgy * kSobelY[dy + 1][dxx + 1]);
                        }
                    }
                }
    });
}

// ------------------------------------------------------------------ attention

// Scaled dot-product attention over spatial tokens. q,k: [1,h,w,d],
// v: [1,h,w,dv]; returns [1,h,w,dv]. If probs_out is non-null the row-softmax
// matrix (tokens x tokens) is copied there.
template <class T>
int op_attention(Graph<T>& g, int q, int k, int v, TensorT<T>* probs_out = nullptr) {
    const auto& qv = g.val(q);
    const auto& kv = g.val(k);
    const auto& vv = g.val(v);
    if (!qv.same_shape(kv)) throw std::invalid_argument("op_attention: q/k shape mismatch");
    if (vv.h != qv.h || vv.w != qv.w)
        throw std::invalid_argument("op_attention: v spatial shape mismatch");
    const int n = qv.h * qv.w, d = qv.c, dv = vv.c;
    const double scale = 1.0 / std::sqrt(double(d));
    auto probs = std::make_shared<TensorT<T>>(n, n, 1);
    // logits + row softmax
    for (int i = 0; i < n; ++i) {
        const T* qi = qv.v.data() + size_t(i) * d;
        double mx = -1e300;
        std::vector<double> row(static_cast<size_t>(n));
        for (int j = 0; j < n; ++j) {
            const T* kj = kv.v.data() + size_t(j) * d;
            double s = 0;
            for (int t = 0; t < d; ++t) s += double(qi[t]) * double(kj[t]);
            row[size_t(j)] = s * scale;
            mx = std::max(mx, row[size_t(j)]);
        }
        double z = 0;
        for (int j = 0; j < n; ++j) {
            row[size_t(j)] = std::exp(row[size_t(j)] - mx);
            z += row[size_t(j)];
        }
        for (int j = 0; j < n; ++j) probs->at(i, j, 0) = T(row[size_t(j)] / z);
    }
    if (probs_out) *probs_out = *probs;
    TensorT<T> out(qv.h, qv.w, dv);
    for (int i = 0; i < n; ++i) {
        T* oi = out.v.data() + size_t(i) * dv;
        for (int j = 0; j < n; ++j) {
            T p = probs->at(i, j, 0);
            const T* vj = vv.v.data() + size_t(j) * dv;
            for (int t = 0; t < dv; ++t) oi[t] += p * vj[t];
        }
    }
    bool needs = g.needs(q) || g.needs(k) || g.needs(v);
    return g.add_node(std::move(out), needs, [q, k, v, probs, scale](Graph<T>& g, int self) {
        const auto& d_out = g.grad_of(self);
        const auto& qv = g.val(q);
        const auto& kv = g.val(k);
        const auto& vv = g.val(v);
        const int n = qv.h * qv.w, d = qv.c, dv = vv.c;
        if (g.needs(v)) {
            auto& dvacc = g.grad_acc(v);
            for (int j = 0; j < n; ++j) {
                T* dvj = dvacc.v.data() + size_t(j) * dv;
                for (int i = 0; i < n; ++i) {
                    T p = probs->at(i, j, 0);
                    const T* doi = d_out.v.data() + size_t(i) * dv;
                    for (int t = 0; t < dv; ++t) dvj[t] += p * doi[t];
                }
            }
        }
        if (!g.needs(q) && !g.needs(k)) return;
        TensorT<T>* dq = g.needs(q) ? &g.grad_acc(q) : nullptr;
        TensorT<T>* dk = g.needs(k) ? &g.grad_acc(k) : nullptr;
        const size_t nn = size_t(n);
        std::vector<double> dp(nn), dlogit(nn);
        for (int i = 0; i < n; ++i) {
            const T* doi = d_out.v.data() + size_t(i) * dv;
            double inner = 0;  // sum_j P_ij * dP_ij
            for (int j = 0; j < n; ++j) {
                const T* vj = vv.v.data() + size_t(j) * dv;
                double s = 0;
                for (int t = 0; t < dv; ++t) s += double(doi[t]) * double(vj[t]);
                dp[size_t(j)] = s;
                inner += double(probs->at(i, j, 0)) * s;
            }
            for (int j = 0; j < n; ++j)
                dlogit[size_t(j)] = double(probs->at(i, j, 0)) * (dp[size_t(j)] - inner);
            const T* qi = qv.v.data() + size_t(i) * d;
            for (int j = 0; j < n; ++j) {
                double dl = dlogit[size_t(j)] * scale;
                if (dl == 0) continue;
                const T* kj = kv.v.data() + size_t(j) * d;
                if (dq) {
                    T* dqi = dq->v.data() + size_t(i) * d;
                    for (int t = 0; t < d; ++t) dqi[t] += T(dl * double(kj[t]));
                }
                if (dk) {
                    T* dkj = dk->v.data() + size_t(j) * d;
                    for (int t = 0; t < d; ++t) dkj[t] += T(dl * double(qi[t]));
                }
            }
        }
    });
}

}  // namespace spjf
