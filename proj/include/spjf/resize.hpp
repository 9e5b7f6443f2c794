#pragma once

// Lossy down/up sampling baselines for the sampling comparison in `verify`,
// plus reflect padding / cropping used by inference on arbitrary sizes.

#include <cmath>

#include "spjf/tensor.hpp"

namespace spjf {

// Bilinear resize, half-pixel centers (the usual align_corners=false mapping).
template <class T>
TensorT<T> resize_bilinear(const TensorT<T>& x, int oh, int ow) {
    TensorT<T> out(oh, ow, x.c);
    const double sy = double(x.h) / oh, sx = double(x.w) / ow;
    for (int y = 0; y < oh; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        int y0 = int(std::floor(fy));
        double wy = fy - y0;
        int y0c = std::clamp(y0, 0, x.h - 1), y1c = std::clamp(y0 + 1, 0, x.h - 1);
        for (int xx = 0; xx < ow; ++xx) {
            double fx = (xx + 0.5) * sx - 0.5;
            int x0 = int(std::floor(fx));
            double wx = fx - x0;
            int x0c = std::clamp(x0, 0, x.w - 1), x1c = std::clamp(x0 + 1, 0, x.w - 1);
            for (int ch = 0; ch < x.c; ++ch) {
                double v00 = x.at(y0c, x0c, ch), v01 = x.at(y0c, x1c, ch);
                double v10 = x.at(y1c, x0c, ch), v11 = x.at(y1c, x1c, ch);
                double v = (1 - wy) * ((1 - wx) * v00 + wx * v01) +
                           wy * ((1 - wx) * v10 + wx * v11);
                out.at(y, xx, ch) = T(v);
            }
        }
    }
    return out;
}

// Strided decimation (keep every other pixel) and nearest upsample.
template <class T>
TensorT<T> downsample_strided(const TensorT<T>& x) {
    TensorT<T> out((x.h + 1) / 2, (x.w + 1) / 2, x.c);
    for (int y = 0; y < out.h; ++y)
        for (int xx = 0; xx < out.w; ++xx)
            for (int ch = 0; ch < x.c; ++ch) out.at(y, xx, ch) = x.at(2 * y, 2 * xx, ch);
    return out;
}

template <class T>
TensorT<T> upsample_nearest2x(const TensorT<T>& x) {
    TensorT<T> out(x.h * 2, x.w * 2, x.c);
    for (int y = 0; y < out.h; ++y)
        for (int xx = 0; xx < out.w; ++xx)
            for (int ch = 0; ch < x.c; ++ch) out.at(y, xx, ch) = x.at(y / 2, xx / 2, ch);
    return out;
}

// Reflect-pad on the bottom/right up to the next multiple of `mult`.
template <class T>
TensorT<T> pad_to_multiple(const TensorT<T>& x, int mult) {
    int ph = (mult - x.h % mult) % mult;
    int pw = (mult - x.w % mult) % mult;
    if (ph == 0 && pw == 0) return x;
    TensorT<T> out(x.h + ph, x.w + pw, x.c);
    for (int y = 0; y < out.h; ++y) {
        int sy = reflect_index(y, x.h);
        for (int xx = 0; xx < out.w; ++xx) {
            int sx = reflect_index(xx, x.w);
            for (int ch = 0; ch < x.c; ++ch) out.at(y, xx, ch) = x.at(sy, sx, ch);
        }
    }
    return out;
}

template <class T>
TensorT<T> crop_top_left(const TensorT<T>& x, int h, int w) {
    if (h > x.h || w > x.w) throw std::invalid_argument("crop_top_left: crop exceeds image");
    TensorT<T> out(h, w, x.c);
    for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx)
            for (int ch = 0; ch < x.c; ++ch) out.at(y, xx, ch) = x.at(y, xx, ch);
    return out;
}

}  // namespace spjf
