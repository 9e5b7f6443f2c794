#pragma once

// Per-channel Sobel gradient magnitude with reflect-101 borders.
//   Kx = [-1 0 1; -2 0 2; -1 0 1]   Ky = Kx^T   (cross-correlation)
// A unit-slope ramp along x gives |g| = 8 in the interior. The two kernel
// sides are accumulated with identical operation order and then subtracted,
// so constant inputs cancel exactly (no rounding residue).

#include <cmath>

#include "spjf/tensor.hpp"

namespace spjf {

inline constexpr int kSobelX[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
inline constexpr int kSobelY[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};

// Raw gx/gy fields; out tensors are allocated by the caller at input shape.
template <class T>
void sobel_xy(const TensorT<T>& x, TensorT<T>& gx, TensorT<T>& gy) {
    for (int y = 0; y < x.h; ++y) {
        const int ym = reflect_index(y - 1, x.h), yp = reflect_index(y + 1, x.h);
        for (int xx = 0; xx < x.w; ++xx) {
            const int xm = reflect_index(xx - 1, x.w), xp = reflect_index(xx + 1, x.w);
            for (int ch = 0; ch < x.c; ++ch) {
                T tl = x.at(ym, xm, ch), tc = x.at(ym, xx, ch), tr = x.at(ym, xp, ch);
                T ml = x.at(y, xm, ch), mr = x.at(y, xp, ch);
                T bl = x.at(yp, xm, ch), bc = x.at(yp, xx, ch), br = x.at(yp, xp, ch);
                T right = tr + 2 * mr + br;
                T left = tl + 2 * ml + bl;
                T bottom = bl + 2 * bc + br;
                T top = tl + 2 * tc + tr;
                gx.at(y, xx, ch) = right - left;
                gy.at(y, xx, ch) = bottom - top;
            }
        }
    }
}

template <class T>
TensorT<T> sobel_grad(const TensorT<T>& x) {
    if (x.h < 3 || x.w < 3)
        throw std::invalid_argument("sobel_grad: image " + x.shape_str() +
                                    " smaller than 3x3 kernel");
    TensorT<T> gx(x.h, x.w, x.c), gy(x.h, x.w, x.c), out(x.h, x.w, x.c);
    sobel_xy(x, gx, gy);
    for (size_t i = 0; i < out.v.size(); ++i) {
        double a = double(gx.v[i]), b = double(gy.v[i]);
        out.v[i] = T(std::sqrt(a * a + b * b));
    }
    return out;
}

}  // namespace spjf
