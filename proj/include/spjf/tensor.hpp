#pragma once

// Dense row-major tensor used throughout the library. Activations are
// [1,h,w,c]; convolution weights are [kh,kw,cin,cout]; per-channel vectors
// are [1,1,1,c]. Scalar type is a template parameter so the same code can
// run in float for training and double for numerical checks.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace spjf {

template <class T>
struct TensorT {
    int n = 0, h = 0, w = 0, c = 0;
    std::vector<T> v;

    TensorT() = default;
    TensorT(int h_, int w_, int c_) : n(1), h(h_), w(w_), c(c_), v(size_t(h_) * w_ * c_, T(0)) {}
    TensorT(int n_, int h_, int w_, int c_)
        : n(n_), h(h_), w(w_), c(c_), v(size_t(n_) * h_ * w_ * c_, T(0)) {}

    size_t size() const { return v.size(); }
    bool same_shape(const TensorT& o) const {
        return n == o.n && h == o.h && w == o.w && c == o.c;
    }
    std::string shape_str() const {
        return "[" + std::to_string(n) + "," + std::to_string(h) + "," + std::to_string(w) + "," +
               std::to_string(c) + "]";
    }

    T& at(int y, int x, int ch) { return v[(size_t(y) * w + x) * c + ch]; }
    const T& at(int y, int x, int ch) const { return v[(size_t(y) * w + x) * c + ch]; }
    T& at4(int i, int y, int x, int ch) { return v[((size_t(i) * h + y) * w + x) * c + ch]; }
    const T& at4(int i, int y, int x, int ch) const {
        return v[((size_t(i) * h + y) * w + x) * c + ch];
    }

    T* row(int y) { return v.data() + size_t(y) * w * c; }
    const T* row(int y) const { return v.data() + size_t(y) * w * c; }

    void fill(T x) { std::fill(v.begin(), v.end(), x); }

    bool all_finite() const {
        for (T x : v)
            if (!std::isfinite(double(x))) return false;
        return true;
    }

    T max_abs() const {
        T m = 0;
        for (T x : v) m = std::max(m, std::abs(x));
        return m;
    }

    template <class U>
    TensorT<U> cast() const {
        TensorT<U> o;
        o.n = n; o.h = h; o.w = w; o.c = c;
        o.v.resize(v.size());
        for (size_t i = 0; i < v.size(); ++i) o.v[i] = U(v[i]);
        return o;
    }
};

using Tensor = TensorT<float>;

template <class T>
T max_abs_diff(const TensorT<T>& a, const TensorT<T>& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
    T m = 0;
    for (size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
    return m;
}

// Mirror index without edge duplication (reflect-101). Valid for any offset;
// extension is periodic with period 2(n-1).
inline int reflect_index(int i, int n) {
    if (n == 1) return 0;
    int period = 2 * (n - 1);
    i = ((i % period) + period) % period;
    return i < n ? i : period - i;
}

inline void check_even(int h, int w, const char* who) {
    if (h % 2 != 0)
        throw std::invalid_argument(std::string(who) + ": height " + std::to_string(h) +
                                    " is odd");
    if (w % 2 != 0)
        throw std::invalid_argument(std::string(who) + ": width " + std::to_string(w) +
                                    " is odd");
}

// Deterministic uniform fill in [lo, hi).
template <class T>
void fill_uniform(TensorT<T>& t, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    for (auto& x : t.v) x = T(dist(rng));
}

}  // namespace spjf
