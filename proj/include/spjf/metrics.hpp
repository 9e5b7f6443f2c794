#pragma once

// Reference PSNR / SSIM. PSNR uses one MSE jointly over all channels with
// peak 1.0; identical inputs report the +infinity sentinel. SSIM runs on the
// channel-mean luminance with an 11x11 Gaussian window (sigma 1.5), K1=0.01,
// K2=0.03, L=1, averaged over valid windows only.

#include <limits>

#include "spjf/tensor.hpp"

namespace spjf {

template <class T>
double psnr(const TensorT<T>& a, const TensorT<T>& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("psnr: shape mismatch");
    double mse = 0;
    for (size_t i = 0; i < a.v.size(); ++i) {
        double d = double(a.v[i]) - double(b.v[i]);
        mse += d * d;
    }
    mse /= double(a.size());
    if (mse == 0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

namespace detail {

inline const std::vector<double>& ssim_window() {
    static const std::vector<double> win = [] {
        std::vector<double> w(11);
        double sum = 0;
        for (int i = 0; i < 11; ++i) {
            double x = i - 5;
            w[size_t(i)] = std::exp(-x * x / (2.0 * 1.5 * 1.5));
            sum += w[size_t(i)];
        }
        for (auto& v : w) v /= sum;
        return w;
    }();
    return win;
}

template <class T>
std::vector<double> luminance(const TensorT<T>& a) {
    std::vector<double> out(size_t(a.h) * size_t(a.w));
    for (int y = 0; y < a.h; ++y)
        for (int x = 0; x < a.w; ++x) {
            double s = 0;
            for (int ch = 0; ch < a.c; ++ch) s += double(a.at(y, x, ch));
            out[size_t(y) * size_t(a.w) + size_t(x)] = s / a.c;
        }
    return out;
}

}  // namespace detail

template <class T>
double ssim(const TensorT<T>& a, const TensorT<T>& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("ssim: shape mismatch");
    if (a.h < 11 || a.w < 11)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");
    const auto& win = detail::ssim_window();
    auto la = detail::luminance(a), lb = detail::luminance(b);
    const int h = a.h, w = a.w;
    const double C1 = 0.01 * 0.01, C2 = 0.03 * 0.03;  // (K*L)^2 with L=1

    // separable Gaussian filtering of x, y, x^2, y^2, xy over valid windows
    auto filter = [&](const std::vector<double>& src, auto&& f) {
        std::vector<double> tmp(size_t(h) * size_t(w - 10));
        for (int y = 0; y < h; ++y)
            for (int x = 0; x + 10 < w; ++x) {
                double s = 0;
                for (int k = 0; k < 11; ++k)
                    s += win[size_t(k)] * f(src[size_t(y) * size_t(w) + size_t(x + k)]);
                tmp[size_t(y) * size_t(w - 10) + size_t(x)] = s;
            }
        std::vector<double> out(size_t(h - 10) * size_t(w - 10));
        for (int y = 0; y + 10 < h; ++y)
            for (int x = 0; x + 10 < w; ++x) {
                double s = 0;
                for (int k = 0; k < 11; ++k)
                    s += win[size_t(k)] * tmp[size_t(y + k) * size_t(w - 10) + size_t(x)];
                out[size_t(y) * size_t(w - 10) + size_t(x)] = s;
            }
        return out;
    };
    auto id = [](double v) { return v; };
    auto mu_a = filter(la, id), mu_b = filter(lb, id);
    auto sq_a = filter(la, [](double v) { return v * v; });
    auto sq_b = filter(lb, [](double v) { return v * v; });
    std::vector<double> ab(la.size());
    for (size_t i = 0; i < ab.size(); ++i) ab[i] = la[i] * lb[i];
    auto m_ab = filter(ab, id);

    double acc = 0;
    for (size_t i = 0; i < mu_a.size(); ++i) {
        double ma = mu_a[i], mb = mu_b[i];
        double va = sq_a[i] - ma * ma;
        double vb = sq_b[i] - mb * mb;
        double cov = m_ab[i] - ma * mb;
        acc += ((2 * ma * mb + C1) * (2 * cov + C2)) /
               ((ma * ma + mb * mb + C1) * (va + vb + C2));
    }
    return acc / double(mu_a.size());
}

}  // namespace spjf
