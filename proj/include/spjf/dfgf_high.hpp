#pragma once

// DFGF wavelet high-frequency branch: gradient-prior-gated enhancement of the
// {HL, LH, HH} subbands in the wavelet domain.
//   F_hf       = (HL + LH + HH) + G
//   F_dw       = depthwise-separable conv(G);  M_s = sigmoid(1x1(F_dw))
//   F_spatial  = depthwise-separable conv(concat(HL, LH, HH))
//   F_enhanced = F_spatial (.) M_s + F_spatial
// fused through a conv over concat(F_enhanced, F_hf), refined by residual
// blocks, and emitted through three projection heads.

#include "spjf/diag.hpp"
#include "spjf/nn.hpp"
#include "spjf/params.hpp"

namespace spjf {

template <class T>
struct HighBranchParamsT {
    int gdw_w = -1, gpw_w = -1, gpw_b = -1;   // prior feature path
    int gate_w = -1, gate_b = -1;             // 1x1 -> single-channel map
    int sdw_w = -1, spw_w = -1, spw_b = -1;   // subband feature path
    int fuse_w = -1, fuse_b = -1;
    std::vector<std::array<int, 4>> res;      // per block: w1,b1,w2,b2
    int head_w[3] = {-1, -1, -1};
    int head_b[3] = {-1, -1, -1};
    bool has_ms = true, has_fhf = true, has_fs = true;
};

template <class T>
HighBranchParamsT<T> build_high_branch(ParamStore<T>& store, const std::string& prefix,
                                       int channels, int width, int n_res, bool with_ms,
                                       bool with_fhf, bool with_fs, std::mt19937_64& rng) {
    HighBranchParamsT<T> p;
    p.has_ms = with_ms;
    p.has_fhf = with_fhf;
    p.has_fs = with_fs;
    if (with_ms) {
        TensorT<T> gdw(3, 3, 1, channels);
        fill_uniform(gdw, rng, -std::sqrt(6.0 / 9.0), std::sqrt(6.0 / 9.0));
        p.gdw_w = store.add(prefix + ".gdw.w", std::move(gdw));
        p.gpw_w = add_conv_param(store, prefix + ".gpw.w", 1, 1, channels, width, rng);
        p.gpw_b = add_bias_param(store, prefix + ".gpw.b", width);
        p.gate_w = add_conv_param(store, prefix + ".gate.w", 1, 1, width, 1, rng);
        p.gate_b = add_bias_param(store, prefix + ".gate.b", 1);
    }
    if (with_fs) {
        TensorT<T> sdw(3, 3, 1, 3 * channels);
        fill_uniform(sdw, rng, -std::sqrt(6.0 / 9.0), std::sqrt(6.0 / 9.0));
        p.sdw_w = store.add(prefix + ".sdw.w", std::move(sdw));
    }
    p.spw_w = add_conv_param(store, prefix + ".spw.w", 1, 1, 3 * channels, width, rng);
    p.spw_b = add_bias_param(store, prefix + ".spw.b", width);
    const int fuse_in = width + (with_fhf ? channels : 0);
    p.fuse_w = add_conv_param(store, prefix + ".fuse.w", 3, 3, fuse_in, width, rng);
    p.fuse_b = add_bias_param(store, prefix + ".fuse.b", width);
    for (int r = 0; r < n_res; ++r) {
        std::string rp = prefix + ".res" + std::to_string(r + 1);
        std::array<int, 4> blk;
        blk[0] = add_conv_param(store, rp + ".conv1.w", 3, 3, width, width, rng);
        blk[1] = add_bias_param(store, rp + ".conv1.b", width);
        blk[2] = add_conv_param(store, rp + ".conv2.w", 3, 3, width, width, rng);
        blk[3] = add_bias_param(store, rp + ".conv2.b", width);
        p.res.push_back(blk);
    }
    static const char* head[3] = {"hl", "lh", "hh"};
    for (int i = 0; i < 3; ++i) {
        p.head_w[i] =
            add_conv_param(store, prefix + ".head_" + head[i] + ".w", 3, 3, width, channels, rng);
        p.head_b[i] = add_bias_param(store, prefix + ".head_" + head[i] + ".b", channels);
    }
    return p;
}

// Gradient-guided gating map M_s in (0,1), single channel.
template <class T>
int gate_map(Graph<T>& g, ParamStore<T>& store, const HighBranchParamsT<T>& p, int grad_prior,
             ForwardDiag* diag = nullptr) {
    int fdw = op_dwconv_same(g, grad_prior, g.param(store, p.gdw_w), -1);
    int f = op_conv_valid(g, fdw, g.param(store, p.gpw_w), g.param(store, p.gpw_b));
    int ms = op_sigmoid(g, op_conv_valid(g, f, g.param(store, p.gate_w),
                                         g.param(store, p.gate_b)));
    const auto& mv = g.val(ms);
    for (T x : mv.v) {
        if (!(x >= T(0) && x <= T(1)))
            throw std::runtime_error("gate_map: non-finite gating map");
    }
    if (diag) {
        diag->saw_gate = true;
        for (T x : mv.v) {
            diag->ms_min = std::min(diag->ms_min, double(x));
            diag->ms_max = std::max(diag->ms_max, double(x));
        }
    }
    return ms;
}

template <class T>
struct HighBranchOut {
    int hl = -1, lh = -1, hh = -1;
};

// node ids of intermediates, for tests and diagnostics
struct HighBranchProbe {
    int f_spatial = -1, f_enhanced = -1, ms = -1, fused = -1, refined = -1;
};

template <class T>
HighBranchOut<T> high_branch(Graph<T>& g, ParamStore<T>& store, const HighBranchParamsT<T>& p,
                             int hl, int lh, int hh, int grad_prior,
                             ForwardDiag* diag = nullptr, HighBranchProbe* probe = nullptr) {
    const auto& hv = g.val(hl);
    if (!hv.same_shape(g.val(lh)) || !hv.same_shape(g.val(hh)) ||
        !hv.same_shape(g.val(grad_prior)))
        throw std::invalid_argument("high_branch: input shape mismatch");
    int cat = op_concat_c(g, {hl, lh, hh});
    int feat = p.has_fs ? op_dwconv_same(g, cat, g.param(store, p.sdw_w), -1) : cat;
    int f_spatial = op_conv_valid(g, feat, g.param(store, p.spw_w), g.param(store, p.spw_b));
    int f_enh = f_spatial;
    if (p.has_ms) {
        int ms = gate_map(g, store, p, grad_prior, diag);
        f_enh = op_add(g, op_mul_spatial(g, f_spatial, ms), f_spatial);
        if (probe) probe->ms = ms;
    }
    int fused_in = f_enh;
    if (p.has_fhf) {
        int f_hf = op_add(g, op_add(g, op_add(g, hl, lh), hh), grad_prior);
        fused_in = op_concat_c(g, {f_enh, f_hf});
    }
    int x = op_silu(g, op_conv_same(g, fused_in, g.param(store, p.fuse_w),
                                    g.param(store, p.fuse_b)));
    if (probe) {
        probe->f_spatial = f_spatial;
        probe->f_enhanced = f_enh;
        probe->fused = x;
    }
    for (const auto& blk : p.res) {
        int h1 = op_silu(g, op_conv_same(g, x, g.param(store, blk[0]), g.param(store, blk[1])));
        int h2 = op_conv_same(g, h1, g.param(store, blk[2]), g.param(store, blk[3]));
        x = op_add(g, x, h2);
    }
    if (probe) probe->refined = x;
    HighBranchOut<T> out;
    out.hl = op_conv_same(g, x, g.param(store, p.head_w[0]), g.param(store, p.head_b[0]));
    out.lh = op_conv_same(g, x, g.param(store, p.head_w[1]), g.param(store, p.head_b[1]));
    out.hh = op_conv_same(g, x, g.param(store, p.head_w[2]), g.param(store, p.head_b[2]));
    return out;
}

}  // namespace spjf
