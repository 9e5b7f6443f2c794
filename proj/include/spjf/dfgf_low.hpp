#pragma once

// DFGF wavelet low-frequency branch. The low band and the structural prior
// are taken to the Fourier domain; amplitude runs through a channel-attention
// + sigmoid-gate dual path, phase through prior-guided attention over spatial
// tokens, and the merged result through a dilated-conv / wavelet-conv spatial
// refinement with a residual connection.

#include "spjf/diag.hpp"
#include "spjf/nn.hpp"
#include "spjf/params.hpp"
#include "spjf/smgm.hpp"

namespace spjf {

template <class T>
struct AmplitudeParamsT {
    int ca_fc1_w = -1, ca_fc1_b = -1;
    int ca_fc2_w = -1, ca_fc2_b = -1;
    int reduce_w = -1, reduce_b = -1;
    int gate_w = -1, gate_b = -1;
};

template <class T>
struct PhaseParamsT {
    int qk_w = -1, qk_b = -1;
    int v_w = -1, v_b = -1;
    int proj_w = -1, proj_b = -1;
    int dim = 0;
};

template <class T>
struct SpatialParamsT {
    int dil_w = -1, dil_b = -1;
    // depthwise 3x3 kernels on every subband of a 3-level Haar pyramid
    int wt_detail_w[3][3];  // [level][HL,LH,HH]
    int wt_low_w = -1;      // coarsest L band
    int fuse_w = -1, fuse_b = -1;
    int dil_width = 0;
    bool has_dc = false, has_wtc = false;
};

template <class T>
struct LowBranchParamsT {
    AmplitudeParamsT<T> amp;
    PhaseParamsT<T> pha;
    SpatialParamsT<T> spa;
    bool has_amp = false, has_pha = false, has_spa = false;
};

template <class T>
AmplitudeParamsT<T> build_amplitude(ParamStore<T>& store, const std::string& prefix,
                                    int channels, int hidden, std::mt19937_64& rng) {
    AmplitudeParamsT<T> p;
    const int cc = 2 * channels;
    p.ca_fc1_w = add_conv_param(store, prefix + ".ca_fc1.w", 1, 1, cc, hidden, rng);
    p.ca_fc1_b = add_bias_param(store, prefix + ".ca_fc1.b", hidden);
    p.ca_fc2_w = add_conv_param(store, prefix + ".ca_fc2.w", 1, 1, hidden, channels, rng);
    p.ca_fc2_b = add_bias_param(store, prefix + ".ca_fc2.b", channels);
    p.reduce_w = add_conv_param(store, prefix + ".reduce.w", 3, 3, cc, channels, rng);
    p.reduce_b = add_bias_param(store, prefix + ".reduce.b", channels);
    p.gate_w = add_conv_param(store, prefix + ".gate.w", 3, 3, cc, channels, rng);
    p.gate_b = add_bias_param(store, prefix + ".gate.b", channels);
    return p;
}

// B1 = CA(A_concat) (.) reduce(A_concat);  B2 = sigmoid(conv(A_concat)) (.) A
template <class T>
int amplitude_enhance(Graph<T>& g, ParamStore<T>& store, const AmplitudeParamsT<T>& p, int a,
                      int a_s, ForwardDiag* diag = nullptr) {
    if (!g.val(a).same_shape(g.val(a_s)))
        throw std::invalid_argument("amplitude_enhance: amplitude shape mismatch");
    int cat = op_concat_c(g, {a, a_s});
    int ca_h = op_silu(g, op_conv_valid(g, op_gap(g, cat), g.param(store, p.ca_fc1_w),
                                        g.param(store, p.ca_fc1_b)));
    int ca = op_sigmoid(g, op_conv_valid(g, ca_h, g.param(store, p.ca_fc2_w),
                                         g.param(store, p.ca_fc2_b)));
    int reduced = op_conv_same(g, cat, g.param(store, p.reduce_w), g.param(store, p.reduce_b));
    int b1 = op_mul_channel(g, reduced, ca);
    int gate = op_sigmoid(g, op_conv_same(g, cat, g.param(store, p.gate_w),
                                          g.param(store, p.gate_b)));
    int b2 = op_mul(g, gate, a);
    if (diag) {
        diag->saw_amplitude = true;
        const auto& b2v = g.val(b2);
        const auto& av = g.val(a);
        for (size_t i = 0; i < b2v.v.size(); ++i)
            diag->b2_abs_minus_a_max = std::max(
                diag->b2_abs_minus_a_max,
                double(std::abs(b2v.v[i])) - double(std::abs(av.v[i])));
    }
    return op_add(g, b1, b2);
}

template <class T>
PhaseParamsT<T> build_phase(ParamStore<T>& store, const std::string& prefix, int channels,
                            int dim, std::mt19937_64& rng) {
    PhaseParamsT<T> p;
    p.dim = dim;
    p.qk_w = add_conv_param(store, prefix + ".qk.w", 3, 3, 2 * channels, 2 * dim, rng);
    p.qk_b = add_bias_param(store, prefix + ".qk.b", 2 * dim);
    p.v_w = add_conv_param(store, prefix + ".v.w", 3, 3, channels, dim, rng);
    p.v_b = add_bias_param(store, prefix + ".v.b", dim);
    p.proj_w = add_conv_param(store, prefix + ".proj.w", 1, 1, dim, channels, rng);
    p.proj_b = add_bias_param(store, prefix + ".proj.b", channels);
    return p;
}

// Q,K from conv(Concat(P_s, P)), V from conv(P); scaled dot-product attention
// over the h*w spatial tokens, then a 1x1 projection back to C channels.
template <class T>
int phase_enhance(Graph<T>& g, ParamStore<T>& store, const PhaseParamsT<T>& p, int pha,
                  int pha_s, int token_cap, ForwardDiag* diag = nullptr) {
    const auto& pv = g.val(pha);
    if (!pv.same_shape(g.val(pha_s)))
        throw std::invalid_argument("phase_enhance: phase shape mismatch");
    const int tokens = pv.h * pv.w;
    if (tokens > token_cap)
        throw std::invalid_argument("phase_enhance: " + std::to_string(tokens) +
                                    " tokens exceed the configured cap of " +
                                    std::to_string(token_cap));
    int cat = op_concat_c(g, {pha_s, pha});
    int qk = op_conv_same(g, cat, g.param(store, p.qk_w), g.param(store, p.qk_b));
    int q = op_slice_c(g, qk, 0, p.dim);
    int k = op_slice_c(g, qk, p.dim, p.dim);
    int v = op_conv_same(g, pha, g.param(store, p.v_w), g.param(store, p.v_b));
    TensorT<T> probs;
    int att = op_attention(g, q, k, v, diag ? &probs : nullptr);
    if (diag) {
        diag->saw_attention = true;
        for (int i = 0; i < tokens; ++i) {
            double s = 0;
            for (int j = 0; j < tokens; ++j) s += double(probs.at(i, j, 0));
            diag->attn_rowsum_maxdev = std::max(diag->attn_rowsum_maxdev, std::abs(s - 1.0));
        }
    }
    return op_conv_valid(g, att, g.param(store, p.proj_w), g.param(store, p.proj_b));
}

template <class T>
SpatialParamsT<T> build_spatial(ParamStore<T>& store, const std::string& prefix, int channels,
                                int dil_width, bool with_dc, bool with_wtc,
                                std::mt19937_64& rng) {
    SpatialParamsT<T> p;
    p.dil_width = dil_width;
    p.has_dc = with_dc;
    p.has_wtc = with_wtc;
    int fuse_in = 0;
    if (with_dc) {
        p.dil_w = add_conv_param(store, prefix + ".dil.w", 3, 3, channels, dil_width, rng);
        p.dil_b = add_bias_param(store, prefix + ".dil.b", dil_width);
        fuse_in += dil_width;
    }
    if (with_wtc) {
        static const char* band[3] = {"hl", "lh", "hh"};
        for (int lv = 0; lv < 3; ++lv)
            for (int b = 0; b < 3; ++b) {
                TensorT<T> w(3, 3, 1, channels);
                double bound = std::sqrt(6.0 / 9.0);
                fill_uniform(w, rng, -bound, bound);
                p.wt_detail_w[lv][b] = store.add(
                    prefix + ".wt.l" + std::to_string(lv + 1) + "." + band[b] + ".w",
                    std::move(w));
            }
        TensorT<T> wl(3, 3, 1, channels);
        fill_uniform(wl, rng, -std::sqrt(6.0 / 9.0), std::sqrt(6.0 / 9.0));
        p.wt_low_w = store.add(prefix + ".wt.low.w", std::move(wl));
        fuse_in += channels;
    }
    if (fuse_in > 0) {
        p.fuse_w = add_conv_param(store, prefix + ".fuse.w", 1, 1, fuse_in, channels, rng);
        p.fuse_b = add_bias_param(store, prefix + ".fuse.b", channels);
    }
    return p;
}

// 3-level Haar decomposition with a depthwise 3x3 on every subband, then
// exact reconstruction.
template <class T>
int wtconv3(Graph<T>& g, ParamStore<T>& store, const SpatialParamsT<T>& p, int x) {
    const int c = g.val(x).c;
    int cur = x;
    std::vector<std::array<int, 3>> details;
    for (int lv = 0; lv < 3; ++lv) {
        int packed = op_haar_fwd(g, cur);
        cur = op_slice_c(g, packed, 0, c);
        std::array<int, 3> d;
        for (int b = 0; b < 3; ++b) {
            int band = op_slice_c(g, packed, (b + 1) * c, c);
            d[size_t(b)] = op_dwconv_same(g, band, g.param(store, p.wt_detail_w[lv][b]), -1);
        }
        details.push_back(d);
    }
    cur = op_dwconv_same(g, cur, g.param(store, p.wt_low_w), -1);
    for (int lv = 2; lv >= 0; --lv) {
        const auto& d = details[size_t(lv)];
        int packed = op_concat_c(g, {cur, d[0], d[1], d[2]});
        cur = op_haar_inv(g, packed);
    }
    return cur;
}

// y = x + fuse(dilated_conv_d4(x), wtconv3(x)); identity when both paths are
// disabled or all branch weights are zero.
template <class T>
int spatial_enhance(Graph<T>& g, ParamStore<T>& store, const SpatialParamsT<T>& p, int x) {
    const auto& xv = g.val(x);
    if (p.has_wtc && (xv.h % 8 != 0 || xv.w % 8 != 0))
        throw std::invalid_argument("spatial_enhance: shape " + xv.shape_str() +
                                    " not divisible by 8 (3-level wavelet path)");
    std::vector<int> branches;
    if (p.has_dc)
        branches.push_back(op_silu(
            g, op_conv_same(g, x, g.param(store, p.dil_w), g.param(store, p.dil_b), 4)));
    if (p.has_wtc) branches.push_back(wtconv3(g, store, p, x));
    if (branches.empty()) return x;
    int cat = branches.size() == 1 ? branches[0] : op_concat_c(g, branches);
    int fused = op_conv_valid(g, cat, g.param(store, p.fuse_w), g.param(store, p.fuse_b));
    return op_add(g, x, fused);
}

// Full low branch: FFT split of band and prior, amplitude + phase
// enhancement, inverse FFT, spatial refinement.
template <class T>
int low_branch(Graph<T>& g, ParamStore<T>& store, const LowBranchParamsT<T>& p, int L, int s,
               int token_cap, ForwardDiag* diag = nullptr) {
    const int c = g.val(L).c;
    if (g.val(L).h != g.val(s).h || g.val(L).w != g.val(s).w)
        throw std::invalid_argument("low_branch: band/prior shape mismatch");
    int spec = op_fft_split(g, L);
    int a = op_slice_c(g, spec, 0, c);
    int pha = op_slice_c(g, spec, c, c);
    int spec_s = op_fft_split(g, s);
    int a_s = op_slice_c(g, spec_s, 0, c);
    int pha_s = op_slice_c(g, spec_s, c, c);
    int a_hat = p.has_amp ? amplitude_enhance(g, store, p.amp, a, a_s, diag) : a;
    int p_hat = p.has_pha ? phase_enhance(g, store, p.pha, pha, pha_s, token_cap, diag) : pha;
    int merged = op_fft_merge(g, a_hat, p_hat);
    return p.has_spa ? spatial_enhance(g, store, p.spa, merged) : merged;
}

}  // namespace spjf
