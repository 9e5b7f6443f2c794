#include <catch2/catch_amalgamated.hpp>

#include "spjf/haar.hpp"
#include "testutil.hpp"

using namespace spjf;
using testutil::random_image_d;
using testutil::random_image_f;

TEST_CASE("dwt2 of a constant image kills all detail bands") {
    Tensor x(8, 8, 3);
    x.fill(0.25f);
    auto lv = dwt2(x);
    for (size_t i = 0; i < lv.L.v.size(); ++i) {
        CHECK(lv.L.v[i] == Catch::Approx(0.5).margin(1e-7));
        CHECK(lv.HL.v[i] == 0.0f);
        CHECK(lv.LH.v[i] == 0.0f);
        CHECK(lv.HH.v[i] == 0.0f);
    }
}

TEST_CASE("dwt2 on the 2x2 block [[1,2],[3,4]]") {
    Tensor x(2, 2, 1);
    x.at(0, 0, 0) = 1;
    x.at(0, 1, 0) = 2;
    x.at(1, 0, 0) = 3;
    x.at(1, 1, 0) = 4;
    auto lv = dwt2(x);
    CHECK(lv.L.v[0] == 5.0f);
    CHECK(lv.HL.v[0] == -1.0f);
    CHECK(lv.LH.v[0] == -2.0f);
    CHECK(lv.HH.v[0] == 0.0f);
}

TEST_CASE("idwt2 inverts the defining 2x2 case") {
    WaveletLevel lv{Tensor(1, 1, 1), Tensor(1, 1, 1), Tensor(1, 1, 1), Tensor(1, 1, 1)};
    lv.L.v[0] = 5;
    lv.HL.v[0] = -1;
    lv.LH.v[0] = -2;
    lv.HH.v[0] = 0;
    auto x = idwt2(lv);
    CHECK(x.at(0, 0, 0) == 1.0f);
    CHECK(x.at(0, 1, 0) == 2.0f);
    CHECK(x.at(1, 0, 0) == 3.0f);
    CHECK(x.at(1, 1, 0) == 4.0f);
}

TEST_CASE("idwt2 of L=2v with zero details gives constant v") {
    WaveletLevel lv{Tensor(4, 4, 2), Tensor(4, 4, 2), Tensor(4, 4, 2), Tensor(4, 4, 2)};
    lv.L.fill(0.8f);
    auto x = idwt2(lv);
    for (float v : x.v) CHECK(v == Catch::Approx(0.4).margin(1e-7));
}

TEST_CASE("round trips hold to 1e-5 over random images") {
    for (uint64_t s = 0; s < 100; ++s) {
        auto x = random_image_f(64, 64, 3, 1000 + s);
        auto back = idwt2(dwt2(x));
        REQUIRE(max_abs_diff(x, back) < 1e-5f);
    }
    // subband-side round trip
    WaveletLevel lv{random_image_f(8, 8, 3, 7, -1, 1), random_image_f(8, 8, 3, 8, -1, 1),
                    random_image_f(8, 8, 3, 9, -1, 1), random_image_f(8, 8, 3, 10, -1, 1)};
    auto lv2 = dwt2(idwt2(lv));
    CHECK(max_abs_diff(lv.L, lv2.L) < 1e-5f);
    CHECK(max_abs_diff(lv.HL, lv2.HL) < 1e-5f);
    CHECK(max_abs_diff(lv.LH, lv2.LH) < 1e-5f);
    CHECK(max_abs_diff(lv.HH, lv2.HH) < 1e-5f);
}

TEST_CASE("odd dimensions are rejected naming the axis") {
    Tensor bad_h(3, 4, 1), bad_w(4, 3, 1);
    CHECK_THROWS_WITH(dwt2(bad_h), Catch::Matchers::ContainsSubstring("height"));
    CHECK_THROWS_WITH(dwt2(bad_w), Catch::Matchers::ContainsSubstring("width"));
}

TEST_CASE("idwt2 rejects mismatched subbands") {
    WaveletLevel lv{Tensor(2, 2, 1), Tensor(2, 2, 1), Tensor(2, 2, 1), Tensor(2, 4, 1)};
    CHECK_THROWS(idwt2(lv));
}

TEST_CASE("decompose produces the level shape law") {
    auto x = random_image_f(256, 256, 3, 42);
    auto p = decompose(x, 3);
    REQUIRE(p.depth() == 3);
    CHECK(p.levels[2].L.h == 32);
    CHECK(p.levels[2].L.w == 32);
    CHECK(p.levels[2].L.c == 3);
    CHECK(p.levels[0].L.h == 128);
    CHECK(p.levels[1].HH.w == 64);
}

TEST_CASE("depth-1 decompose equals dwt2; depth-1 reconstruct equals idwt2") {
    auto x = random_image_f(16, 16, 2, 5);
    auto p = decompose(x, 1);
    auto lv = dwt2(x);
    CHECK(max_abs_diff(p.levels[0].HH, lv.HH) == 0.0f);
    CHECK(max_abs_diff(reconstruct(p), idwt2(lv)) == 0.0f);
}

TEST_CASE("decompose rejects indivisible dimensions") {
    CHECK_THROWS(decompose(Tensor(20, 24, 1), 3));
    CHECK_THROWS(decompose(Tensor(24, 20, 1), 3));
}

TEST_CASE("full pyramid round trip and coarse constant scaling") {
    auto x = random_image_f(64, 64, 3, 77);
    CHECK(max_abs_diff(reconstruct(decompose(x, 3)), x) < 1e-5f);

    // all-zero details with L_3 = 8v reconstructs the constant v
    WaveletPyramid p;
    int h = 32;
    for (int i = 0; i < 3; ++i) {
        WaveletLevel lv{Tensor(h, h, 1), Tensor(h, h, 1), Tensor(h, h, 1), Tensor(h, h, 1)};
        p.levels.push_back(lv);
        h /= 2;
    }
    p.levels[2].L.fill(8.0f * 0.3f);
    auto img = reconstruct(p);
    for (float v : img.v) CHECK(v == Catch::Approx(0.3).margin(1e-6));
}

TEST_CASE("reconstruct rejects a broken level chain") {
    auto p = decompose(random_image_f(32, 32, 1, 3), 2);
    p.levels[1].L = Tensor(5, 5, 1);
    p.levels[1].HL = Tensor(5, 5, 1);
    p.levels[1].LH = Tensor(5, 5, 1);
    p.levels[1].HH = Tensor(5, 5, 1);
    CHECK_THROWS_WITH(reconstruct(p), Catch::Matchers::ContainsSubstring("chain"));
}

TEST_CASE("one Haar level preserves energy (double)") {
    for (uint64_t s = 0; s < 10; ++s) {
        auto x = random_image_d(32, 32, 3, 500 + s, -1.0, 1.0);
        auto lv = dwt2(x);
        double ex = 0, eb = 0;
        for (double v : x.v) ex += v * v;
        for (double v : lv.L.v) eb += v * v;
        for (double v : lv.HL.v) eb += v * v;
        for (double v : lv.LH.v) eb += v * v;
        for (double v : lv.HH.v) eb += v * v;
        REQUIRE(std::abs(ex - eb) / ex < 1e-6);
    }
}

TEST_CASE("L band of a nonnegative image stays nonnegative at every level") {
    auto x = random_image_f(64, 64, 3, 11);
    auto p = decompose(x, 4);
    for (const auto& lv : p.levels)
        for (float v : lv.L.v) REQUIRE(v >= 0.0f);
}

TEST_CASE("perfect reconstruction up to depth 4") {
    for (int depth = 1; depth <= 4; ++depth) {
        auto x = random_image_f(64, 64, 3, 600 + depth);
        CHECK(max_abs_diff(reconstruct(decompose(x, depth)), x) < 1e-5f);
    }
}
