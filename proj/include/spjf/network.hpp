#pragma once

// SPJFNet assembly: depth-level Haar decomposition, SMGM priors at the
// coarsest level, the Fourier low branch on the coarsest band, gated high
// branches at every level, and progressive inverse-wavelet reconstruction.

#include <map>
#include <sstream>

#include "spjf/dfgf_high.hpp"
#include "spjf/resize.hpp"
#include "spjf/dfgf_low.hpp"
#include "spjf/smgm.hpp"

namespace spjf {

struct ModelConfig {
    int depth = 3;
    int channels = 3;
    int w_s = 16;      // SMGM feature width
    int w_l = 8;       // low-branch width (CA hidden, attention dim, dilated width)
    int w_h = 16;      // high-branch width
    int n_res = 2;     // residual blocks per high branch
    int token_cap = 4096;
    // module toggles
    bool smgm = true, d_low = true, d_high = true;
    bool amp = true, pha = true, spa = true;
    bool m_s = true, f_hf = true, f_s = true, wtc = true, dc = true;

    static const std::vector<std::string>& toggle_names() {
        static const std::vector<std::string> names = {"smgm", "d_low", "d_high", "amp",
                                                       "pha",  "spa",   "m_s",    "f_hf",
                                                       "f_s",  "wtc",   "dc"};
        return names;
    }
    bool* toggle(const std::string& name) {
        if (name == "smgm") return &smgm;
        if (name == "d_low") return &d_low;
        if (name == "d_high") return &d_high;
        if (name == "amp") return &amp;
        if (name == "pha") return &pha;
        if (name == "spa") return &spa;
        if (name == "m_s") return &m_s;
        if (name == "f_hf") return &f_hf;
        if (name == "f_s") return &f_s;
        if (name == "wtc") return &wtc;
        if (name == "dc") return &dc;
        return nullptr;
    }

    void validate() const {
        if (depth < 1 || depth > 4)
            throw std::invalid_argument("ModelConfig: depth must be in 1..4");
        if (channels < 1) throw std::invalid_argument("ModelConfig: channels must be >= 1");
        if (w_s < 4 || w_l < 4 || w_h < 4)
            throw std::invalid_argument("ModelConfig: widths must be >= 4");
        if (n_res < 0) throw std::invalid_argument("ModelConfig: n_res must be >= 0");
        if (token_cap < 1) throw std::invalid_argument("ModelConfig: token_cap must be >= 1");
    }

    std::string to_text() const {
        std::ostringstream os;
        os << "depth=" << depth << "\nchannels=" << channels << "\nw_s=" << w_s
           << "\nw_l=" << w_l << "\nw_h=" << w_h << "\nn_res=" << n_res
           << "\ntoken_cap=" << token_cap << "\n";
        ModelConfig copy = *this;
        for (const auto& name : toggle_names())
            os << name << "=" << (*copy.toggle(name) ? 1 : 0) << "\n";
        return os.str();
    }

    static ModelConfig from_text(const std::string& text) {
        ModelConfig cfg;
        std::istringstream is(text);
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            auto eq = line.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("ModelConfig: malformed line '" + line + "'");
            std::string key = line.substr(0, eq), val = line.substr(eq + 1);
            if (key == "depth")
                cfg.depth = std::stoi(val);
            else if (key == "channels")
                cfg.channels = std::stoi(val);
            else if (key == "w_s")
                cfg.w_s = std::stoi(val);
            else if (key == "w_l")
                cfg.w_l = std::stoi(val);
            else if (key == "w_h")
                cfg.w_h = std::stoi(val);
            else if (key == "n_res")
                cfg.n_res = std::stoi(val);
            else if (key == "token_cap")
                cfg.token_cap = std::stoi(val);
            else if (bool* t = cfg.toggle(key))
                *t = val != "0";
            else
                throw std::invalid_argument("ModelConfig: unknown key '" + key + "'");
        }
        cfg.validate();
        return cfg;
    }
};

template <class T>
struct ModelStateT {
    ModelConfig cfg;
    ParamStore<T> store;
    SmgmParamsT<T> smgm;
    LowBranchParamsT<T> low;
    std::vector<HighBranchParamsT<T>> high;  // index 0 = level 1 (finest)
    uint64_t step = 0;
};

using ModelState = ModelStateT<float>;

template <class T>
ModelStateT<T> build_model(const ModelConfig& cfg, uint64_t seed) {
    cfg.validate();
    ModelStateT<T> st;
    st.cfg = cfg;
    std::mt19937_64 rng(seed);
    if (cfg.smgm) st.smgm = build_smgm(st.store, "smgm", cfg.channels, cfg.w_s, rng);
    if (cfg.d_low) {
        st.low.has_amp = cfg.amp;
        st.low.has_pha = cfg.pha;
        st.low.has_spa = cfg.spa && (cfg.wtc || cfg.dc);
        if (cfg.amp)
            st.low.amp = build_amplitude(st.store, "low.amp", cfg.channels, cfg.w_l, rng);
        if (cfg.pha) st.low.pha = build_phase(st.store, "low.pha", cfg.channels, cfg.w_l, rng);
        if (st.low.has_spa)
            st.low.spa =
                build_spatial(st.store, "low.spa", cfg.channels, cfg.w_l, cfg.dc, cfg.wtc, rng);
    }
    if (cfg.d_high)
        for (int lvl = 1; lvl <= cfg.depth; ++lvl)
            st.high.push_back(build_high_branch(st.store, "high.l" + std::to_string(lvl),
                                                cfg.channels, cfg.w_h, cfg.n_res, cfg.m_s,
                                                cfg.f_hf, cfg.f_s, rng));
    return st;
}

template <class T>
struct ForwardNodes {
    int output = -1;  // unclamped restored image
    int s = -1;       // structural prior at the deepest level
    int grad = -1;    // gradient prior at the deepest level
    int gamma = -1;   // [1,1,1,C]
};

namespace detail {

template <class T>
void check_activation(const Graph<T>& g, int id, const char* module) {
    if (!g.val(id).all_finite())
        throw std::runtime_error(std::string("forward: non-finite activation in ") + module);
}

}  // namespace detail

// Full forward pass on one [1,H,W,C] image node. The output node is left
// unclamped so losses see raw values; inference clamps afterwards.
template <class T>
ForwardNodes<T> forward(Graph<T>& g, ModelStateT<T>& st, int image,
                        ForwardDiag* diag = nullptr) {
    const ModelConfig& cfg = st.cfg;
    const auto& xv = g.val(image);
    const int div = 1 << cfg.depth;
    if (xv.h % div != 0 || xv.w % div != 0)
        throw std::invalid_argument("forward: input " + xv.shape_str() +
                                    " not divisible by 2^" + std::to_string(cfg.depth));
    if (xv.c != cfg.channels)
        throw std::invalid_argument("forward: input channels don't match the model config");

    // analysis pyramid; per level keep the packed node for its detail slices
    const int c = cfg.channels;
    std::vector<int> packed(size_t(cfg.depth));
    int cur = image;
    for (int lvl = 0; lvl < cfg.depth; ++lvl) {
        packed[size_t(lvl)] = op_haar_fwd(g, cur);
        cur = op_slice_c(g, packed[size_t(lvl)], 0, c);
    }
    int l_deep = cur;

    // priors at the deepest level
    ForwardNodes<T> out;
    int gamma_override = -1;
    if (!cfg.smgm) {
        TensorT<T> ones(1, 1, c);
        ones.fill(T(1));
        gamma_override = g.leaf(std::move(ones));
    }
    PriorNodes<T> priors =
        mine_priors(g, st.store, st.smgm, l_deep, cfg.depth, gamma_override);
    out.s = priors.s;
    out.grad = priors.grad;
    out.gamma = priors.gamma;
    {
        const auto& gv = g.val(priors.gamma);
        for (T x : gv.v)
            if (!(x >= T(0) && x <= T(1)))
                throw std::runtime_error("forward: non-finite gamma in smgm");
        if (diag)
            for (T x : gv.v) diag->gamma.push_back(double(x));
    }

    // low branch on the deepest band
    cur = cfg.d_low ? low_branch(g, st.store, st.low, l_deep, priors.s, cfg.token_cap, diag)
                    : l_deep;
    detail::check_activation(g, cur, "low_branch");

    // high branches, coarsest to finest, reconstructing one level at a time
    for (int lvl = cfg.depth; lvl >= 1; --lvl) {
        int pk = packed[size_t(lvl - 1)];
        int hl = op_slice_c(g, pk, c, c);
        int lh = op_slice_c(g, pk, 2 * c, c);
        int hh = op_slice_c(g, pk, 3 * c, c);
        if (cfg.d_high) {
            int gp = lvl == cfg.depth
                         ? priors.grad
                         : op_sobel(g, op_normalize_low(g, cur, lvl));
            auto enhanced = high_branch(g, st.store, st.high[size_t(lvl - 1)], hl, lh, hh, gp,
                                        diag);
            hl = enhanced.hl;
            lh = enhanced.lh;
            hh = enhanced.hh;
        }
        cur = op_haar_inv(g, op_concat_c(g, {cur, hl, lh, hh}));
        detail::check_activation(g, cur, cfg.d_high ? "high_branch" : "reconstruct");
    }
    out.output = cur;
    return out;
}

// Inference: pad to the model's divisibility requirement, forward, clamp to
// [0,1], crop back.
template <class T>
TensorT<T> infer(ModelStateT<T>& st, const TensorT<T>& image, ForwardDiag* diag = nullptr) {
    int mult = 1 << st.cfg.depth;
    if (st.cfg.d_low && st.cfg.spa && (st.cfg.wtc || st.cfg.dc))
        mult *= 8;  // spatial module needs the deepest band divisible by 8
    TensorT<T> padded = pad_to_multiple(image, mult);
    Graph<T> g;
    int x = g.leaf(padded);
    auto nodes = forward(g, st, x, diag);
    TensorT<T> y = g.val(nodes.output);
    for (auto& v : y.v) v = T(std::min(1.0, std::max(0.0, double(v))));
    return crop_top_left(y, image.h, image.w);
}

template <class T>
size_t count_params(const ModelStateT<T>& st) {
    return st.store.scalar_count();
}

// Analytic forward FLOP estimate (MACs x2) for an HxW input, covering convs,
// the MLPs, attention and the DFTs.
inline double flops_estimate(const ModelConfig& cfg, int H, int W) {
    auto conv = [](double n, double k, double cin, double cout) { return 2.0 * n * k * k * cin * cout; };
    const double C = cfg.channels;
    double total = 0;
    const double nd = double(H >> cfg.depth) * double(W >> cfg.depth);
    if (cfg.smgm) {
        total += conv(nd, 3, C, cfg.w_s) + conv(nd, 3, cfg.w_s, cfg.w_s);
        total += 2.0 * (double(cfg.w_s) * cfg.w_s + double(cfg.w_s) * C);
        total += 2.0 * nd * C * 10;  // normalize + pow + sobel
    }
    if (cfg.d_low) {
        const double hd = double(H >> cfg.depth), wd = double(W >> cfg.depth);
        total += 2.0 * 4.0 * C * nd * (hd + wd) * 2.0;  // two forward DFTs
        total += 2.0 * 4.0 * C * nd * (hd + wd);        // one inverse DFT
        if (cfg.amp) {
            total += conv(nd, 3, 2 * C, C) * 2;  // reduce + gate
            total += 2.0 * (2.0 * C * cfg.w_l + double(cfg.w_l) * C);
        }
        if (cfg.pha) {
            total += conv(nd, 3, 2 * C, 2 * cfg.w_l) + conv(nd, 3, C, cfg.w_l) +
                     conv(nd, 1, cfg.w_l, C);
            total += 2.0 * nd * nd * cfg.w_l * 2.0;  // logits + mixture
        }
        if (cfg.spa) {
            if (cfg.dc) total += conv(nd, 3, C, cfg.w_l);
            if (cfg.wtc) {
                double n = nd;
                for (int l = 0; l < 3; ++l) {
                    n /= 4.0;
                    total += 4.0 * conv(n, 3, 1, C) + 16.0 * n * C;
                }
            }
            total += conv(nd, 1, cfg.w_l * (cfg.dc ? 1 : 0) + C * (cfg.wtc ? 1 : 0), C);
        }
    }
    if (cfg.d_high) {
        for (int lvl = 1; lvl <= cfg.depth; ++lvl) {
            const double n = double(H >> lvl) * double(W >> lvl);
            if (cfg.m_s)
                total += conv(n, 3, 1, C) + conv(n, 1, C, cfg.w_h) + conv(n, 1, cfg.w_h, 1);
            if (cfg.f_s) total += conv(n, 3, 1, 3 * C);
            total += conv(n, 1, 3 * C, cfg.w_h);
            total += conv(n, 3, cfg.w_h + (cfg.f_hf ? C : 0), cfg.w_h);
            total += 2.0 * cfg.n_res * conv(n, 3, cfg.w_h, cfg.w_h);
            total += 3.0 * conv(n, 3, cfg.w_h, C);
            total += 2.0 * n * C * 10;  // recomputed priors at shallow levels
        }
    }
    // wavelet analysis/synthesis itself: ~16 ops per pixel per level
    double n = double(H) * W;
    for (int lvl = 1; lvl <= cfg.depth; ++lvl) {
        total += 32.0 * n * C;
        n /= 4.0;
    }
    return total;
}

}  // namespace spjf
