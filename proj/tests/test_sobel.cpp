#include <catch2/catch_amalgamated.hpp>

#include "spjf/sobel.hpp"
#include "testutil.hpp"

using namespace spjf;
using testutil::random_image_f;

namespace {

// Independent brute-force oracle: direct 3x3 correlation with reflect-101
// borders, written without reusing library helpers.
Tensor sobel_oracle(const Tensor& x) {
    auto ref = [](int i, int n) {
        while (i < 0 || i >= n) {
            if (i < 0) i = -i;
            if (i >= n) i = 2 * (n - 1) - i;
        }
        return i;
    };
    const int KX[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
    Tensor out(x.h, x.w, x.c);
    for (int y = 0; y < x.h; ++y)
        for (int xx = 0; xx < x.w; ++xx)
            for (int ch = 0; ch < x.c; ++ch) {
                double gx = 0, gy = 0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        double v = x.at(ref(y + dy, x.h), ref(xx + dx, x.w), ch);
                        gx += KX[dy + 1][dx + 1] * v;
                        gy += KX[dx + 1][dy + 1] * v;  // Ky = Kx^T
                    }
                out.at(y, xx, ch) = float(std::sqrt(gx * gx + gy * gy));
            }
    return out;
}

}  // namespace

TEST_CASE("sobel of a constant image is exactly zero") {
    Tensor x(5, 7, 3);
    x.fill(0.42f);
    auto gm = sobel_grad(x);
    for (float v : gm.v) REQUIRE(v == 0.0f);
}

TEST_CASE("unit-slope horizontal ramp has interior magnitude 8") {
    Tensor x(7, 9, 1);
    for (int y = 0; y < 7; ++y)
        for (int xx = 0; xx < 9; ++xx) x.at(y, xx, 0) = float(xx);
    auto gm = sobel_grad(x);
    for (int y = 1; y < 6; ++y)
        for (int xx = 1; xx < 8; ++xx) REQUIRE(gm.at(y, xx, 0) == Catch::Approx(8.0));
}

TEST_CASE("single white pixel matches the brute-force convolution oracle") {
    Tensor x(9, 9, 1);
    x.at(4, 4, 0) = 1.0f;
    auto gm = sobel_grad(x);
    auto expect = sobel_oracle(x);
    REQUIRE(max_abs_diff(gm, expect) == 0.0f);
}

TEST_CASE("random images match the oracle") {
    for (uint64_t s = 0; s < 5; ++s) {
        auto x = random_image_f(11, 13, 3, 300 + s);
        REQUIRE(max_abs_diff(sobel_grad(x), sobel_oracle(x)) < 1e-6f);
    }
}

TEST_CASE("images smaller than the kernel are rejected") {
    CHECK_THROWS_WITH(sobel_grad(Tensor(2, 8, 1)), Catch::Matchers::ContainsSubstring("3x3"));
    CHECK_THROWS(sobel_grad(Tensor(8, 2, 1)));
}
