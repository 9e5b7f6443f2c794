#pragma once

// Self-Mining Guidance Module: adaptive per-channel gamma from the coarsest
// low band, the structural prior S = L_norm^Gamma, its Sobel gradient prior,
// and the gradient-fidelity + edge-consistency supervision loss.

#include "spjf/nn.hpp"
#include "spjf/params.hpp"

namespace spjf {

inline constexpr double kNormEps = 1e-6;
inline constexpr double kEdgeDivisor = 8.0;  // Sobel response of a unit ramp

// Maps a level-`level` Haar low band of a [0,1] image into [eps, 1].
template <class T>
TensorT<T> normalize_low(const TensorT<T>& L, int level) {
    TensorT<T> out = L;
    const double scale = 1.0 / double(1 << level);
    for (auto& x : out.v) {
        if (x < T(0))
            throw std::invalid_argument(
                "normalize_low: negative entry (input is not a low band of an image)");
        x = T(std::min(1.0, std::max(kNormEps, double(x) * scale)));
    }
    return out;
}

// Graph flavor used inside the network; reconstructed bands may carry small
// negative values, which the clamp floors at eps instead of rejecting.
template <class T>
int op_normalize_low(Graph<T>& g, int L, int level) {
    return op_clamp(g, op_scale(g, L, 1.0 / double(1 << level)), kNormEps, 1.0);
}

template <class T>
struct SmgmParamsT {
    int conv1_w = -1, conv1_b = -1;
    int conv2_w = -1, conv2_b = -1;
    int mlp1_w = -1, mlp1_b = -1;
    int mlp2_w = -1, mlp2_b = -1;
};

template <class T>
SmgmParamsT<T> build_smgm(ParamStore<T>& store, const std::string& prefix, int channels,
                          int width, std::mt19937_64& rng) {
    SmgmParamsT<T> p;
    p.conv1_w = add_conv_param(store, prefix + ".conv1.w", 3, 3, channels, width, rng);
    p.conv1_b = add_bias_param(store, prefix + ".conv1.b", width);
    p.conv2_w = add_conv_param(store, prefix + ".conv2.w", 3, 3, width, width, rng);
    p.conv2_b = add_bias_param(store, prefix + ".conv2.b", width);
    p.mlp1_w = add_conv_param(store, prefix + ".mlp1.w", 1, 1, width, width, rng);
    p.mlp1_b = add_bias_param(store, prefix + ".mlp1.b", width);
    p.mlp2_w = add_conv_param(store, prefix + ".mlp2.w", 1, 1, width, channels, rng);
    p.mlp2_b = add_bias_param(store, prefix + ".mlp2.b", channels);
    return p;
}

// conv stack -> global average pool -> MLP -> sigmoid; returns [1,1,1,C].
template <class T>
int compute_gamma(Graph<T>& g, ParamStore<T>& store, const SmgmParamsT<T>& p, int l_norm) {
    int h1 = op_silu(g, op_conv_same(g, l_norm, g.param(store, p.conv1_w),
                                     g.param(store, p.conv1_b)));
    int h2 = op_silu(g, op_conv_same(g, h1, g.param(store, p.conv2_w),
                                     g.param(store, p.conv2_b)));
    int f = op_gap(g, h2);
    int m = op_silu(g, op_conv_valid(g, f, g.param(store, p.mlp1_w), g.param(store, p.mlp1_b)));
    return op_sigmoid(g,
                      op_conv_valid(g, m, g.param(store, p.mlp2_w), g.param(store, p.mlp2_b)));
}

template <class T>
struct PriorNodes {
    int s = -1;      // structural prior, [1,h,w,C] in (0,1]
    int grad = -1;   // gradient prior, >= 0
    int gamma = -1;  // [1,1,1,C] in (0,1)
};

// S = normalize_low(L)^Gamma, G = sobel(S). `gamma_override` (>= 0) replaces
// the learned gamma node, used when SMGM is toggled off.
template <class T>
PriorNodes<T> mine_priors(Graph<T>& g, ParamStore<T>& store, const SmgmParamsT<T>& p, int L,
                          int level, int gamma_override = -1) {
    PriorNodes<T> out;
    int ln = op_normalize_low(g, L, level);
    out.gamma = gamma_override >= 0 ? gamma_override : compute_gamma(g, store, p, ln);
    out.s = op_pow_channel(g, ln, out.gamma);
    out.grad = op_sobel(g, out.s);
    return out;
}

// lambda1 * mean|G - G_gt| + lambda2 * BCE(edge(S), edge(S_gt)) with
// edge(.) = sobel/8 clamped into [0,1] and the GT edge map as a soft target.
// gt_low is the ground-truth image's same-level low band (no gamma applied).
template <class T>
int smgm_loss(Graph<T>& g, const PriorNodes<T>& pred, const TensorT<T>& gt_low, int level,
              double lambda1, double lambda2) {
    if (lambda1 < 0 || lambda2 < 0)
        throw std::invalid_argument("smgm_loss: loss weights must be nonnegative");
    TensorT<T> s_gt = normalize_low(gt_low, level);
    TensorT<T> g_gt = sobel_grad(s_gt);

    int loss = -1;
    if (lambda1 > 0) {
        int gterm = op_mean_abs_diff(g, pred.grad, g.leaf(g_gt));
        loss = op_scale(g, gterm, lambda1);
    }
    if (lambda2 > 0) {
        TensorT<T> edge_gt = g_gt;
        for (auto& x : edge_gt.v) x = T(std::min(1.0, std::max(0.0, double(x) / kEdgeDivisor)));
        int edge_pred = op_clamp(g, op_scale(g, pred.grad, 1.0 / kEdgeDivisor), 0.0, 1.0);
        int bterm = op_scale(g, op_bce_mean(g, edge_pred, g.leaf(edge_gt)), lambda2);
        loss = loss < 0 ? bterm : op_add(g, loss, bterm);
    }
    if (loss < 0) {
        TensorT<T> zero(1, 1, 1);
        loss = g.leaf(zero);
    }
    return loss;
}

}  // namespace spjf
