#include <catch2/catch_amalgamated.hpp>

#include "spjf/dfgf_high.hpp"
#include "testutil.hpp"

using namespace spjf;
using testutil::random_image_d;
using testutil::rel_err;

namespace {

ParamStore<double> make_store(HighBranchParamsT<double>& p, int channels, int width, int n_res,
                              uint64_t seed, bool ms = true, bool fhf = true, bool fs = true) {
    ParamStore<double> store;
    std::mt19937_64 rng(seed);
    p = build_high_branch(store, "high.l1", channels, width, n_res, ms, fhf, fs, rng);
    return store;
}

}  // namespace

TEST_CASE("gate map is 0.5 everywhere when all weights are zero") {
    HighBranchParamsT<double> p;
    auto store = make_store(p, 3, 8, 1, 1);
    for (auto n : {"high.l1.gdw.w", "high.l1.gpw.w", "high.l1.gpw.b", "high.l1.gate.w",
                   "high.l1.gate.b"})
        store[store.find(n)].value.fill(0.0);
    Graph<double> g;
    int ms = gate_map(g, store, p, g.leaf(random_image_d(5, 5, 3, 2, 0.0, 4.0)));
    REQUIRE(g.val(ms).c == 1);
    for (double v : g.val(ms).v) REQUIRE(v == 0.5);
}

TEST_CASE("gate map stays strictly inside (0,1)") {
    for (uint64_t s = 0; s < 5; ++s) {
        HighBranchParamsT<double> p;
        auto store = make_store(p, 3, 8, 1, 10 + s);
        Graph<double> g;
        ForwardDiag diag;
        gate_map(g, store, p, g.leaf(random_image_d(6, 6, 3, 20 + s, 0.0, 6.0)), &diag);
        REQUIRE(diag.saw_gate);
        REQUIRE(diag.ms_min > 0.0);
        REQUIRE(diag.ms_max < 1.0);
    }
}

TEST_CASE("gate map matches a straight-line hand evaluation") {
    HighBranchParamsT<double> p;
    auto store = make_store(p, 1, 4, 1, 3);
    auto grad = random_image_d(4, 4, 1, 4, 0.0, 2.0);
    Graph<double> g;
    int ms = gate_map(g, store, p, g.leaf(grad));

    auto P = [&](const char* n) -> const TensorT<double>& { return store[store.find(n)].value; };
    const auto& dw = P("high.l1.gdw.w");
    const auto& pw = P("high.l1.gpw.w");
    const auto& pb = P("high.l1.gpw.b");
    const auto& gw = P("high.l1.gate.w");
    const auto& gb = P("high.l1.gate.b");
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
            double fdw = 0;
            for (int ky = 0; ky < 3; ++ky)
                for (int kx = 0; kx < 3; ++kx)
                    fdw += grad.at(reflect_index(y + ky - 1, 4), reflect_index(x + kx - 1, 4), 0) *
                           dw.at4(ky, kx, 0, 0);
            double logit = gb.v[0];
            for (int co = 0; co < 4; ++co)
                logit += (fdw * pw.at4(0, 0, 0, co) + pb.v[size_t(co)]) * gw.at4(0, 0, co, 0);
            double expect = 1.0 / (1.0 + std::exp(-logit));
            REQUIRE(rel_err(g.val(ms).at(y, x, 0), expect) < 1e-12);
        }
}

TEST_CASE("without the gate, F_enhanced is exactly F_spatial") {
    HighBranchParamsT<double> p;
    auto store = make_store(p, 3, 8, 1, 5, /*ms=*/false);
    Graph<double> g;
    auto hl = random_image_d(6, 6, 3, 6, -1, 1);
    auto lh = random_image_d(6, 6, 3, 7, -1, 1);
    auto hh = random_image_d(6, 6, 3, 8, -1, 1);
    auto gr = random_image_d(6, 6, 3, 9, 0, 2);
    HighBranchProbe probe;
    high_branch(g, store, p, g.leaf(hl), g.leaf(lh), g.leaf(hh), g.leaf(gr), nullptr, &probe);
    REQUIRE(probe.f_enhanced == probe.f_spatial);
}

TEST_CASE("F_enhanced equals F_spatial*(1+M_s) and is bounded by 2*F_spatial") {
    HighBranchParamsT<double> p;
    auto store = make_store(p, 3, 8, 2, 11);
    Graph<double> g;
    auto hl = random_image_d(6, 6, 3, 12, -1, 1);
    auto lh = random_image_d(6, 6, 3, 13, -1, 1);
    auto hh = random_image_d(6, 6, 3, 14, -1, 1);
    auto gr = random_image_d(6, 6, 3, 15, 0, 2);
    HighBranchProbe probe;
    high_branch(g, store, p, g.leaf(hl), g.leaf(lh), g.leaf(hh), g.leaf(gr), nullptr, &probe);
    const auto& fs = g.val(probe.f_spatial);
    const auto& fe = g.val(probe.f_enhanced);
    const auto& ms = g.val(probe.ms);
    double fs_max = fs.max_abs();
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x)
            for (int ch = 0; ch < 8; ++ch) {
                double expect = fs.at(y, x, ch) * (1.0 + ms.at(y, x, 0));
                REQUIRE(rel_err(fe.at(y, x, ch), expect, 1e-12) < 1e-12);
            }
    REQUIRE(fe.max_abs() <= 2.0 * fs_max + 1e-12);
}

TEST_CASE("residual blocks with zeroed second convs act as identity") {
    HighBranchParamsT<double> p1, p2;
    auto s1 = make_store(p1, 3, 8, 2, 16);
    auto s2 = make_store(p2, 3, 8, 2, 16);
    // different first convs, zeroed second convs: outputs must agree
    for (auto* s : {&s1, &s2})
        for (auto& e : s->entries)
            if (e.name.find(".res") != std::string::npos &&
                e.name.find(".conv2.") != std::string::npos)
                e.value.fill(0.0);
    std::mt19937_64 scramble(99);
    for (auto& e : s2.entries)
        if (e.name.find(".res") != std::string::npos &&
            e.name.find(".conv1.") != std::string::npos)
            fill_uniform(e.value, scramble, -0.5, 0.5);
    auto hl = random_image_d(6, 6, 3, 17, -1, 1);
    auto lh = random_image_d(6, 6, 3, 18, -1, 1);
    auto hh = random_image_d(6, 6, 3, 19, -1, 1);
    auto gr = random_image_d(6, 6, 3, 20, 0, 2);
    Graph<double> ga, gb;
    auto oa = high_branch(ga, s1, p1, ga.leaf(hl), ga.leaf(lh), ga.leaf(hh), ga.leaf(gr));
    auto ob = high_branch(gb, s2, p2, gb.leaf(hl), gb.leaf(lh), gb.leaf(hh), gb.leaf(gr));
    REQUIRE(max_abs_diff(ga.val(oa.hl), gb.val(ob.hl)) == 0.0);
    REQUIRE(max_abs_diff(ga.val(oa.hh), gb.val(ob.hh)) == 0.0);
}

TEST_CASE("output subbands keep the input shape; mismatches are rejected") {
    HighBranchParamsT<double> p;
    auto store = make_store(p, 3, 16, 2, 21);
    Graph<double> g;
    auto hl = random_image_d(10, 14, 3, 22, -1, 1);
    auto lh = random_image_d(10, 14, 3, 23, -1, 1);
    auto hh = random_image_d(10, 14, 3, 24, -1, 1);
    auto gr = random_image_d(10, 14, 3, 25, 0, 2);
    auto out = high_branch(g, store, p, g.leaf(hl), g.leaf(lh), g.leaf(hh), g.leaf(gr));
    for (int id : {out.hl, out.lh, out.hh}) {
        REQUIRE(g.val(id).h == 10);
        REQUIRE(g.val(id).w == 14);
        REQUIRE(g.val(id).c == 3);
    }
    CHECK_THROWS(high_branch(g, store, p, g.leaf(hl), g.leaf(lh), g.leaf(hh),
                             g.leaf(random_image_d(4, 4, 3, 26))));
}

TEST_CASE("high branch gradients match central differences on gate weights") {
    HighBranchParamsT<double> p;
    auto store = make_store(p, 2, 6, 1, 27);
    auto hl = random_image_d(8, 8, 2, 28, -0.5, 0.5);
    auto lh = random_image_d(8, 8, 2, 29, -0.5, 0.5);
    auto hh = random_image_d(8, 8, 2, 30, -0.5, 0.5);
    auto gr = random_image_d(8, 8, 2, 31, 0.0, 1.5);

    auto eval = [&] {
        Graph<double> g;
        auto out =
            high_branch(g, store, p, g.leaf(hl), g.leaf(lh), g.leaf(hh), g.leaf(gr));
        return g.val(op_mean_all(g, out.hl)).v[0];
    };
    store.zero_grad();
    {
        Graph<double> g;
        auto out =
            high_branch(g, store, p, g.leaf(hl), g.leaf(lh), g.leaf(hh), g.leaf(gr));
        g.backward(op_mean_all(g, out.hl));
    }
    const double h = 1e-6;
    for (auto name : {"high.l1.gate.w", "high.l1.gdw.w", "high.l1.fuse.w", "high.l1.sdw.w"}) {
        auto& e = store[store.find(name)];
        for (size_t i = 0; i < std::min<size_t>(e.value.v.size(), 6); ++i) {
            double keep = e.value.v[i];
            e.value.v[i] = keep + h;
            double lp = eval();
            e.value.v[i] = keep - h;
            double lm = eval();
            e.value.v[i] = keep;
            double fd = (lp - lm) / (2 * h);
            INFO(name << "[" << i << "]");
            REQUIRE((std::abs(e.grad.v[i] - fd) < 1e-8 || rel_err(e.grad.v[i], fd) < 1e-3));
        }
    }
}
