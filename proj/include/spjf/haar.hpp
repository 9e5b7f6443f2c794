#pragma once

// Orthonormal 2x2 Haar analysis/synthesis and the multi-level pyramid.
// One level maps each 2x2 block (a b / c d) to
//   L  = (a+b+c+d)/2    HL = (a-b+c-d)/2
//   LH = (a+b-c-d)/2    HH = (a-b-c+d)/2
// The block matrix is symmetric orthogonal, so synthesis uses the same
// coefficients and the transform is an exact involution (up to rounding).

#include <vector>

#include "spjf/tensor.hpp"

namespace spjf {

template <class T>
struct WaveletLevelT {
    TensorT<T> L, HL, LH, HH;
};

template <class T>
struct WaveletPyramidT {
    std::vector<WaveletLevelT<T>> levels;  // index 0 = finest
    int depth() const { return int(levels.size()); }
};

using WaveletLevel = WaveletLevelT<float>;
using WaveletPyramid = WaveletPyramidT<float>;

template <class T>
WaveletLevelT<T> dwt2(const TensorT<T>& x) {
    check_even(x.h, x.w, "dwt2");
    const int hh = x.h / 2, hw = x.w / 2, c = x.c;
    WaveletLevelT<T> out{TensorT<T>(hh, hw, c), TensorT<T>(hh, hw, c), TensorT<T>(hh, hw, c),
                         TensorT<T>(hh, hw, c)};
    for (int y = 0; y < hh; ++y) {
        const T* r0 = x.row(2 * y);
        const T* r1 = x.row(2 * y + 1);
        for (int xx = 0; xx < hw; ++xx) {
            for (int ch = 0; ch < c; ++ch) {
                T a = r0[size_t(2 * xx) * c + ch];
                T b = r0[size_t(2 * xx + 1) * c + ch];
                T cc = r1[size_t(2 * xx) * c + ch];
                T d = r1[size_t(2 * xx + 1) * c + ch];
                out.L.at(y, xx, ch) = (a + b + cc + d) / 2;
                out.HL.at(y, xx, ch) = (a - b + cc - d) / 2;
                out.LH.at(y, xx, ch) = (a + b - cc - d) / 2;
                out.HH.at(y, xx, ch) = (a - b - cc + d) / 2;
            }
        }
    }
    return out;
}

template <class T>
TensorT<T> idwt2(const WaveletLevelT<T>& lv) {
    if (!lv.L.same_shape(lv.HL) || !lv.L.same_shape(lv.LH) || !lv.L.same_shape(lv.HH))
        throw std::invalid_argument("idwt2: subband shape mismatch");
    const int hh = lv.L.h, hw = lv.L.w, c = lv.L.c;
    TensorT<T> x(hh * 2, hw * 2, c);
    for (int y = 0; y < hh; ++y) {
        T* r0 = x.row(2 * y);
        T* r1 = x.row(2 * y + 1);
        for (int xx = 0; xx < hw; ++xx) {
            for (int ch = 0; ch < c; ++ch) {
                T L = lv.L.at(y, xx, ch);
                T HL = lv.HL.at(y, xx, ch);
                T LH = lv.LH.at(y, xx, ch);
                T HH = lv.HH.at(y, xx, ch);
                r0[size_t(2 * xx) * c + ch] = (L + HL + LH + HH) / 2;
                r0[size_t(2 * xx + 1) * c + ch] = (L - HL + LH - HH) / 2;
                r1[size_t(2 * xx) * c + ch] = (L + HL - LH - HH) / 2;
                r1[size_t(2 * xx + 1) * c + ch] = (L - HL - LH + HH) / 2;
            }
        }
    }
    return x;
}

template <class T>
WaveletPyramidT<T> decompose(const TensorT<T>& x, int depth) {
    if (depth < 1) throw std::invalid_argument("decompose: depth must be >= 1");
    const int div = 1 << depth;
    if (x.h % div != 0)
        throw std::invalid_argument("decompose: height " + std::to_string(x.h) +
                                    " not divisible by 2^" + std::to_string(depth));
    if (x.w % div != 0)
        throw std::invalid_argument("decompose: width " + std::to_string(x.w) +
                                    " not divisible by 2^" + std::to_string(depth));
    WaveletPyramidT<T> p;
    TensorT<T> cur = x;
    for (int i = 0; i < depth; ++i) {
        p.levels.push_back(dwt2(cur));
        cur = p.levels.back().L;
    }
    return p;
}

template <class T>
TensorT<T> reconstruct(const WaveletPyramidT<T>& p) {
    if (p.levels.empty()) throw std::invalid_argument("reconstruct: empty pyramid");
    for (size_t i = 0; i + 1 < p.levels.size(); ++i) {
        const auto& fine = p.levels[i];
        const auto& coarse = p.levels[i + 1];
        if (coarse.L.h * 2 != fine.L.h || coarse.L.w * 2 != fine.L.w || coarse.L.c != fine.L.c)
            throw std::invalid_argument("reconstruct: level shape chain broken at level " +
                                        std::to_string(i + 2));
    }
    TensorT<T> cur = p.levels.back().L;
    for (int i = int(p.levels.size()) - 1; i >= 0; --i) {
        WaveletLevelT<T> lv = p.levels[i];
        lv.L = cur;
        cur = idwt2(lv);
    }
    return cur;
}

}  // namespace spjf
