#pragma once

// Per-channel 2D DFT in amplitude/phase form. Convention: unnormalized
// forward transform, 1/(h*w) on the inverse. Spectra are kept as full
// h x w grids; accumulation is done in double regardless of the tensor
// scalar so round-trips stay well under 1e-5 in float.
//
// Sizes here are small (the transform runs on the coarsest wavelet band),
// so a direct separable DFT with a per-size twiddle table is used.

#include <cmath>
#include <utility>

#include "spjf/tensor.hpp"

namespace spjf {

template <class T>
struct FourierPairT {
    TensorT<T> amplitude;  // modulus, >= 0
    TensorT<T> phase;      // atan2 argument, radians in (-pi, pi]
};

using FourierPair = FourierPairT<float>;

namespace detail {

struct Twiddle {
    int n;
    std::vector<double> cs, sn;  // cs[m] = cos(2*pi*m/n)
    explicit Twiddle(int n_) : n(n_), cs(n_), sn(n_) {
        for (int m = 0; m < n; ++m) {
            double a = 2.0 * M_PI * double(m) / double(n);
            cs[m] = std::cos(a);
            sn[m] = std::sin(a);
        }
    }
};

// One n-point DFT of a strided complex sequence. sign=-1 forward, +1 inverse.
inline void dft1(const double* re_in, const double* im_in, double* re_out, double* im_out,
                 const Twiddle& tw, int sign) {
    const int n = tw.n;
    for (int k = 0; k < n; ++k) {
        double ar = 0, ai = 0;
        int m = 0;  // (k*j) mod n, stepped to stay exact for any n
        for (int j = 0; j < n; ++j) {
            double cr = tw.cs[m];
            double ci = sign < 0 ? -tw.sn[m] : tw.sn[m];
            ar += re_in[j] * cr - im_in[j] * ci;
            ai += re_in[j] * ci + im_in[j] * cr;
            m += k;
            if (m >= n) m -= n;
        }
        re_out[k] = ar;
        im_out[k] = ai;
    }
}

}  // namespace detail

// Full complex 2D DFT per channel. im_in may be empty (treated as zeros).
template <class T>
std::pair<TensorT<T>, TensorT<T>> dft2(const TensorT<T>& re_in, const TensorT<T>& im_in,
                                       int sign, double scale) {
    const int h = re_in.h, w = re_in.w, c = re_in.c;
    const bool has_im = !im_in.v.empty();
    if (has_im && !re_in.same_shape(im_in))
        throw std::invalid_argument("dft2: re/im shape mismatch");
    detail::Twiddle tw_w(w), tw_h(h);
    // working buffers (double) for one channel
    std::vector<double> re(size_t(h) * w), im(size_t(h) * w);
    std::vector<double> buf_r(std::max(h, w)), buf_i(std::max(h, w));
    std::vector<double> out_r(std::max(h, w)), out_i(std::max(h, w));
    TensorT<T> re_out(h, w, c), im_out(h, w, c);
    for (int ch = 0; ch < c; ++ch) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                re[size_t(y) * w + x] = double(re_in.at(y, x, ch));
                im[size_t(y) * w + x] = has_im ? double(im_in.at(y, x, ch)) : 0.0;
            }
        // rows
        for (int y = 0; y < h; ++y) {
            detail::dft1(&re[size_t(y) * w], &im[size_t(y) * w], out_r.data(), out_i.data(),
                         tw_w, sign);
            for (int x = 0; x < w; ++x) {
                re[size_t(y) * w + x] = out_r[x];
                im[size_t(y) * w + x] = out_i[x];
            }
        }
        // columns
        for (int x = 0; x < w; ++x) {
            for (int y = 0; y < h; ++y) {
                buf_r[y] = re[size_t(y) * w + x];
                buf_i[y] = im[size_t(y) * w + x];
            }
            detail::dft1(buf_r.data(), buf_i.data(), out_r.data(), out_i.data(), tw_h, sign);
            for (int y = 0; y < h; ++y) {
                re[size_t(y) * w + x] = out_r[y];
                im[size_t(y) * w + x] = out_i[y];
            }
        }
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                re_out.at(y, x, ch) = T(re[size_t(y) * w + x] * scale);
                im_out.at(y, x, ch) = T(im[size_t(y) * w + x] * scale);
            }
    }
    return {std::move(re_out), std::move(im_out)};
}

template <class T>
FourierPairT<T> fourier_split(const TensorT<T>& x) {
    if (!x.all_finite()) throw std::invalid_argument("fourier_split: non-finite input");
    auto [re, im] = dft2(x, TensorT<T>(), -1, 1.0);
    FourierPairT<T> f{TensorT<T>(x.h, x.w, x.c), TensorT<T>(x.h, x.w, x.c)};
    for (size_t i = 0; i < re.v.size(); ++i) {
        double rr = double(re.v[i]), ii = double(im.v[i]);
        f.amplitude.v[i] = T(std::sqrt(rr * rr + ii * ii));
        f.phase.v[i] = T(std::atan2(ii, rr));
    }
    return f;
}

template <class T>
TensorT<T> fourier_merge(const FourierPairT<T>& f) {
    if (!f.amplitude.same_shape(f.phase))
        throw std::invalid_argument("fourier_merge: amplitude/phase shape mismatch");
    TensorT<T> re(f.amplitude.h, f.amplitude.w, f.amplitude.c);
    TensorT<T> im(f.amplitude.h, f.amplitude.w, f.amplitude.c);
    for (size_t i = 0; i < re.v.size(); ++i) {
        double a = double(f.amplitude.v[i]), p = double(f.phase.v[i]);
        re.v[i] = T(a * std::cos(p));
        im.v[i] = T(a * std::sin(p));
    }
    auto [yr, yi] = dft2(re, im, +1, 1.0 / (double(re.h) * re.w));
    (void)yi;  // imaginary residue is discarded; inputs of interest are real
    return yr;
}

}  // namespace spjf
