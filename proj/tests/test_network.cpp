#include <catch2/catch_amalgamated.hpp>

#include "spjf/network.hpp"
#include "spjf/data.hpp"
#include "testutil.hpp"

using namespace spjf;
using testutil::random_image_f;

namespace {

ModelConfig all_off() {
    ModelConfig mc;
    mc.smgm = mc.d_low = mc.d_high = false;
    return mc;
}

}  // namespace

TEST_CASE("forward preserves the input shape") {
    ModelConfig mc;
    auto st = build_model<float>(mc, 1);
    for (int size : {64, 128}) {
        Graph<float> g;
        auto fw = forward(g, st, g.leaf(random_image_f(size, size, 3, 2)));
        REQUIRE(g.val(fw.output).h == size);
        REQUIRE(g.val(fw.output).w == size);
        REQUIRE(g.val(fw.output).c == 3);
    }
}

TEST_CASE("256x256 forward matches the shape contract") {
    ModelConfig mc;
    auto st = build_model<float>(mc, 3);
    Graph<float> g;
    auto fw = forward(g, st, g.leaf(random_image_f(256, 256, 3, 4)));
    REQUIRE(g.val(fw.output).h == 256);
    REQUIRE(g.val(fw.output).w == 256);
}

TEST_CASE("with every toggle off the network is the identity") {
    auto st = build_model<float>(all_off(), 5);
    REQUIRE(count_params(st) == 0);
    for (uint64_t s = 0; s < 4; ++s) {
        auto x = random_image_f(64, 64, 3, 10 + s);
        Graph<float> g;
        auto fw = forward(g, st, g.leaf(x));
        REQUIRE(max_abs_diff(g.val(fw.output), x) < 1e-5f);
    }
}

TEST_CASE("two forwards with identical state and input are bit-identical") {
    ModelConfig mc;
    auto st = build_model<float>(mc, 6);
    auto x = random_image_f(64, 64, 3, 7);
    Graph<float> g1, g2;
    auto f1 = forward(g1, st, g1.leaf(x));
    auto f2 = forward(g2, st, g2.leaf(x));
    REQUIRE(max_abs_diff(g1.val(f1.output), g2.val(f2.output)) == 0.0f);
}

TEST_CASE("indivisible input shapes are rejected with the depth named") {
    ModelConfig mc;
    auto st = build_model<float>(mc, 8);
    Graph<float> g;
    CHECK_THROWS_WITH(forward(g, st, g.leaf(random_image_f(60, 64, 3, 9))),
                      Catch::Matchers::ContainsSubstring("2^3"));
}

TEST_CASE("parameter count scales ~4x when widths double") {
    ModelConfig mc;
    auto st1 = build_model<float>(mc, 10);
    ModelConfig mc2 = mc;
    mc2.w_s *= 2;
    mc2.w_l *= 2;
    mc2.w_h *= 2;
    auto st2 = build_model<float>(mc2, 10);
    auto by1 = st1.store.count_by_module();
    auto by2 = st2.store.count_by_module();
    // the high branch is conv-conv dominated, so the ratio approaches 4
    double ratio = double(by2["high"]) / double(by1["high"]);
    REQUIRE(ratio > 3.0);
    REQUIRE(ratio < 4.2);
    REQUIRE(by2["smgm"] > 3 * by1["smgm"]);
}

TEST_CASE("default parameter count is within the budget") {
    ModelConfig mc;
    auto st = build_model<float>(mc, 11);
    REQUIRE(count_params(st) <= 300000u);
    REQUIRE(count_params(st) > 0u);
}

TEST_CASE("forward diagnostics report in-range gamma, gate and attention") {
    ModelConfig mc;
    auto st = build_model<float>(mc, 12);
    for (uint64_t s = 0; s < 5; ++s) {
        Graph<float> g;
        ForwardDiag diag;
        forward(g, st, g.leaf(random_image_f(64, 64, 3, 20 + s)), &diag);
        REQUIRE(diag.gamma.size() == 3);
        for (double v : diag.gamma) {
            REQUIRE(v > 0.0);
            REQUIRE(v < 1.0);
        }
        REQUIRE(diag.saw_gate);
        REQUIRE(diag.ms_min > 0.0);
        REQUIRE(diag.ms_max < 1.0);
        REQUIRE(diag.saw_attention);
        REQUIRE(diag.attn_rowsum_maxdev < 1e-6);
        REQUIRE(diag.saw_amplitude);
        REQUIRE(diag.b2_abs_minus_a_max <= 0.0);
    }
}

TEST_CASE("infer pads 250x250 with reflect and crops back") {
    ModelConfig mc;
    auto st = build_model<float>(mc, 13);
    auto x = random_image_f(250, 250, 3, 14);
    Tensor out = infer(st, x);
    REQUIRE(out.h == 250);
    REQUIRE(out.w == 250);
    for (float v : out.v) {
        REQUIRE(v >= 0.0f);
        REQUIRE(v <= 1.0f);
    }
}

TEST_CASE("identity checkpoint reproduces the input through infer") {
    auto st = build_model<float>(all_off(), 15);
    auto x = random_image_f(96, 96, 3, 16);
    Tensor out = infer(st, x);
    REQUIRE(max_abs_diff(out, x) < 1e-5f);
}

TEST_CASE("checkpoint save/load round trip preserves everything") {
    ModelConfig mc;
    mc.w_h = 8;
    auto st = build_model<float>(mc, 17);
    st.step = 42;
    std::string path = std::filesystem::temp_directory_path() / "spjf_ck_test.spjf";
    save_checkpoint(path, mc.to_text(), st.store, st.step);
    CheckpointData ck = load_checkpoint(path);
    REQUIRE(ck.step == 42);
    ModelConfig mc2 = ModelConfig::from_text(ck.config_text);
    REQUIRE(mc2.w_h == 8);
    auto st2 = build_model<float>(mc2, 999);  // different init, then restored
    restore_params(st2.store, ck);
    for (size_t i = 0; i < st.store.entries.size(); ++i)
        REQUIRE(max_abs_diff(st.store.entries[i].value, st2.store.entries[i].value) == 0.0f);
    std::filesystem::remove(path);
}

TEST_CASE("corrupt checkpoints are diagnosed") {
    std::string path = std::filesystem::temp_directory_path() / "spjf_ck_bad.spjf";
    {
        std::ofstream os(path, std::ios::binary);
        os << "not a checkpoint at all";
    }
    CHECK_THROWS_WITH(load_checkpoint(path), Catch::Matchers::ContainsSubstring("not a SPJF"));
    std::filesystem::remove(path);
    CHECK_THROWS(load_checkpoint("/nonexistent/nowhere.spjf"));
}

TEST_CASE("loading a checkpoint into a mismatched model is diagnosed") {
    ModelConfig a;
    auto sa = build_model<float>(a, 18);
    std::string path = std::filesystem::temp_directory_path() / "spjf_ck_shape.spjf";
    save_checkpoint(path, a.to_text(), sa.store, 0);
    CheckpointData ck = load_checkpoint(path);
    ModelConfig b = a;
    b.w_h = 32;
    auto sb = build_model<float>(b, 18);
    CHECK_THROWS_WITH(restore_params(sb.store, ck),
                      Catch::Matchers::ContainsSubstring("shape mismatch"));
    std::filesystem::remove(path);
}

TEST_CASE("model config text round trip") {
    ModelConfig mc;
    mc.depth = 2;
    mc.pha = false;
    mc.token_cap = 1000;
    ModelConfig back = ModelConfig::from_text(mc.to_text());
    REQUIRE(back.depth == 2);
    REQUIRE(back.pha == false);
    REQUIRE(back.token_cap == 1000);
    CHECK_THROWS_WITH(ModelConfig::from_text("bogus_key=3\n"),
                      Catch::Matchers::ContainsSubstring("bogus_key"));
}

TEST_CASE("flops estimate is positive and grows with resolution") {
    ModelConfig mc;
    REQUIRE(flops_estimate(mc, 256, 256) > flops_estimate(mc, 64, 64));
    REQUIRE(flops_estimate(mc, 64, 64) > 0);
}

TEST_CASE("config validation rejects bad values") {
    ModelConfig mc;
    mc.depth = 5;
    CHECK_THROWS(mc.validate());
    mc.depth = 3;
    mc.w_s = 2;
    CHECK_THROWS(mc.validate());
}
