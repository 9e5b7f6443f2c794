#include <catch2/catch_amalgamated.hpp>

#include "spjf/fourier.hpp"
#include "testutil.hpp"

using namespace spjf;
using testutil::random_image_f;

TEST_CASE("constant image concentrates in the DC bin") {
    const int n = 8;
    Tensor x(n, n, 2);
    x.fill(0.3f);
    auto f = fourier_split(x);
    CHECK(f.amplitude.at(0, 0, 0) == Catch::Approx(0.3 * n * n).epsilon(1e-6));
    CHECK(f.phase.at(0, 0, 0) == Catch::Approx(0.0).margin(1e-9));
    for (int y = 0; y < n; ++y)
        for (int xx = 0; xx < n; ++xx)
            if (y != 0 || xx != 0) REQUIRE(f.amplitude.at(y, xx, 0) < 1e-4f);
}

TEST_CASE("merge(split(x)) is identity within 1e-5") {
    for (uint64_t s = 0; s < 20; ++s) {
        auto x = random_image_f(12, 16, 3, 900 + s);  // non power of two on purpose
        auto back = fourier_merge(fourier_split(x));
        REQUIRE(max_abs_diff(x, back) < 1e-5f);
    }
}

TEST_CASE("amplitude is shift-invariant, phase is not") {
    auto x = random_image_f(16, 16, 1, 21);
    Tensor shifted(16, 16, 1);
    for (int y = 0; y < 16; ++y)
        for (int xx = 0; xx < 16; ++xx) shifted.at(y, xx, 0) = x.at((y + 3) % 16, (xx + 5) % 16, 0);
    auto fa = fourier_split(x);
    auto fb = fourier_split(shifted);
    CHECK(max_abs_diff(fa.amplitude, fb.amplitude) < 1e-3f);
    CHECK(max_abs_diff(fa.phase, fb.phase) > 0.1f);
}

TEST_CASE("DC-only spectrum merges to a constant image") {
    const int n = 6;
    FourierPair f{Tensor(n, n, 1), Tensor(n, n, 1)};
    f.amplitude.at(0, 0, 0) = 0.7f * n * n;
    auto x = fourier_merge(f);
    for (float v : x.v) CHECK(v == Catch::Approx(0.7).margin(1e-6));
}

TEST_CASE("merge is linear in amplitude") {
    auto x = random_image_f(8, 8, 1, 33);
    auto f = fourier_split(x);
    FourierPair f2 = f;
    for (auto& a : f2.amplitude.v) a *= 2.0f;
    auto y1 = fourier_merge(f);
    auto y2 = fourier_merge(f2);
    for (size_t i = 0; i < y1.v.size(); ++i)
        REQUIRE(y2.v[i] == Catch::Approx(2.0 * y1.v[i]).margin(1e-5));
}

TEST_CASE("amplitude is nonnegative; shape mismatch rejected") {
    auto f = fourier_split(random_image_f(10, 14, 3, 55));
    for (float a : f.amplitude.v) REQUIRE(a >= 0.0f);
    FourierPair bad{Tensor(4, 4, 1), Tensor(4, 6, 1)};
    CHECK_THROWS(fourier_merge(bad));
}
