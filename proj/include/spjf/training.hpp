#pragma once

// Loss assembly, multi-step Adam schedule, the training loop, and the
// ablation driver.

#include <chrono>
#include <filesystem>

#include "spjf/data.hpp"
#include "spjf/metrics.hpp"
#include "spjf/network.hpp"

namespace spjf {

struct TrainConfig {
    double lr = 4.0e-4;
    std::vector<long long> milestones = {50000, 100000, 125000};  // at full scale
    long long full_scale_iters = 150000;
    double decay = 0.5;
    int batch = 8;
    int crop = 256;
    long long iters = 0;
    double lambda1 = 1.0, lambda2 = 0.1;
    uint64_t seed = 0;
    long long eval_every = 0;  // 0 -> iters/10
    long long ckpt_every = 0;  // 0 -> max(iters/10, 100)
    double grad_clip = 0.0;    // global-norm clip, 0 = off

    void validate() const {
        if (lr <= 0) throw std::invalid_argument("TrainConfig: lr must be > 0");
        if (batch < 1 || crop < 1 || iters < 0)
            throw std::invalid_argument("TrainConfig: bad batch/crop/iters");
        if (lambda1 < 0 || lambda2 < 0)
            throw std::invalid_argument("TrainConfig: loss weights must be >= 0");
        for (size_t i = 1; i < milestones.size(); ++i)
            if (milestones[i] <= milestones[i - 1])
                throw std::invalid_argument("TrainConfig: milestones must be strictly increasing");
        if (full_scale_iters < 1)
            throw std::invalid_argument("TrainConfig: full_scale_iters must be >= 1");
    }

    // milestones scaled proportionally to the configured iteration count
    std::vector<long long> scaled_milestones() const {
        std::vector<long long> out;
        for (long long m : milestones) {
            long long s = (m * iters) / full_scale_iters;
            if (s >= 1 && (out.empty() || s > out.back())) out.push_back(s);
        }
        return out;
    }

    // step is 0-based; the decay applies from the milestone step onward
    double lr_at(long long step, const std::vector<long long>& scaled) const {
        double out = lr;
        for (long long m : scaled)
            if (step >= m) out *= decay;
        return out;
    }
};

struct LossNodes {
    int total = -1, l1 = -1, ls = -1;
};

// mean|y_hat - y| + smgm loss against the GT low band at the deepest level.
template <class T>
LossNodes total_loss(Graph<T>& g, const ForwardNodes<T>& fw, int y_gt,
                     const TensorT<T>& gt_low, int depth, double lambda1, double lambda2) {
    if (!g.val(fw.output).same_shape(g.val(y_gt)))
        throw std::invalid_argument("total_loss: prediction/target shape mismatch");
    LossNodes out;
    out.l1 = op_mean_abs_diff(g, fw.output, y_gt);
    PriorNodes<T> priors{fw.s, fw.grad, fw.gamma};
    out.ls = smgm_loss(g, priors, gt_low, depth, lambda1, lambda2);
    out.total = op_add(g, out.l1, out.ls);
    return out;
}

struct TrainReportRow {
    long long step = 0;
    double total = 0, l1 = 0, ls = 0, lr = 0, elapsed_s = 0;
    double psnr = std::numeric_limits<double>::quiet_NaN();
    double ssim = std::numeric_limits<double>::quiet_NaN();
};

struct TrainReport {
    std::vector<TrainReportRow> rows;

    void to_csv(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw std::runtime_error("TrainReport: cannot write " + path);
        os << "step,total,l1,ls,lr,elapsed_s,psnr,ssim\n";
        char buf[256];
        for (const auto& r : rows) {
            std::snprintf(buf, sizeof buf, "%lld,%.8g,%.8g,%.8g,%.8g,%.3f,", r.step, r.total,
                          r.l1, r.ls, r.lr, r.elapsed_s);
            os << buf;
            if (std::isnan(r.psnr))
                os << ",";
            else {
                std::snprintf(buf, sizeof buf, "%.5f,%.6f", r.psnr, r.ssim);
                os << buf;
            }
            os << "\n";
        }
    }
};

namespace detail {

inline Tensor crop_flip(const Tensor& img, int y0, int x0, int crop, bool fliph, bool flipv) {
    Tensor out(crop, crop, img.c);
    for (int y = 0; y < crop; ++y)
        for (int x = 0; x < crop; ++x) {
            int sy = y0 + (flipv ? crop - 1 - y : y);
            int sx = x0 + (fliph ? crop - 1 - x : x);
            for (int ch = 0; ch < img.c; ++ch) out.at(y, x, ch) = img.at(sy, sx, ch);
        }
    return out;
}

}  // namespace detail

struct TrainResult {
    ModelState state;
    TrainReport report;
};

// Single-stream trainer: deterministic in (seed, config, data). Evaluation
// runs on eval_pairs (full images through infer) when provided.
inline TrainResult train(const std::vector<ImagePair>& pairs, const ModelConfig& mcfg,
                         const TrainConfig& tcfg, const std::vector<ImagePair>& eval_pairs = {},
                         const std::string& out_dir = "") {
    tcfg.validate();
    mcfg.validate();
    if (pairs.empty()) throw std::invalid_argument("train: dataset is empty");
    if (tcfg.crop % (1 << mcfg.depth) != 0)
        throw std::invalid_argument("train: crop not divisible by 2^depth");
    if (mcfg.d_low && mcfg.spa && (mcfg.wtc || mcfg.dc) && (tcfg.crop >> mcfg.depth) % 8 != 0)
        throw std::invalid_argument(
            "train: crop/2^depth must be divisible by 8 for the spatial module");
    for (const auto& [low, high] : pairs) {
        if (low.h < tcfg.crop || low.w < tcfg.crop)
            throw std::invalid_argument("train: crop larger than an image in the dataset");
        if (!low.same_shape(high)) throw std::invalid_argument("train: unpaired shapes");
    }

    TrainResult res{build_model<float>(mcfg, tcfg.seed), {}};
    auto& st = res.state;
    std::mt19937_64 data_rng(tcfg.seed ^ 0xD1B54A32D192ED03ULL);
    const auto scaled = tcfg.scaled_milestones();
    const long long eval_every =
        tcfg.eval_every > 0 ? tcfg.eval_every : std::max<long long>(tcfg.iters / 10, 1);
    const long long ckpt_every =
        tcfg.ckpt_every > 0 ? tcfg.ckpt_every : std::max<long long>(tcfg.iters / 10, 100);
    const auto t0 = std::chrono::steady_clock::now();

    auto run_eval = [&](TrainReportRow& row) {
        const auto& set = eval_pairs.empty() ? pairs : eval_pairs;
        size_t n = std::min<size_t>(set.size(), 8);
        double ps = 0, ss = 0;
        for (size_t i = 0; i < n; ++i) {
            Tensor out = infer(st, set[i].first);
            ps += std::min(psnr(out, set[i].second), 99.0);
            ss += ssim(out, set[i].second);
        }
        row.psnr = ps / double(n);
        row.ssim = ss / double(n);
    };

    auto save_ckpt = [&](const std::string& name) {
        if (out_dir.empty()) return;
        std::filesystem::create_directories(out_dir);
        save_checkpoint(out_dir + "/" + name, mcfg.to_text(), st.store, st.step);
    };

    if (tcfg.iters == 0) save_ckpt("ckpt_final.spjf");

    for (long long step = 1; step <= tcfg.iters; ++step) {
        const double lr = tcfg.lr_at(step - 1, scaled);
        st.store.zero_grad();
        double tot = 0, tl1 = 0, tls = 0;
        for (int b = 0; b < tcfg.batch; ++b) {
            const auto& [low, high] =
                pairs[std::uniform_int_distribution<size_t>(0, pairs.size() - 1)(data_rng)];
            int y0 = low.h > tcfg.crop
                         ? int(std::uniform_int_distribution<int>(0, low.h - tcfg.crop)(data_rng))
                         : 0;
            int x0 = low.w > tcfg.crop
                         ? int(std::uniform_int_distribution<int>(0, low.w - tcfg.crop)(data_rng))
                         : 0;
            bool fh = std::uniform_int_distribution<int>(0, 1)(data_rng) != 0;
            bool fv = std::uniform_int_distribution<int>(0, 1)(data_rng) != 0;
            Tensor in = detail::crop_flip(low, y0, x0, tcfg.crop, fh, fv);
            Tensor gt = detail::crop_flip(high, y0, x0, tcfg.crop, fh, fv);
            Tensor gt_low = decompose(gt, mcfg.depth).levels.back().L;

            Graph<float> g;
            int x = g.leaf(std::move(in));
            int y = g.leaf(std::move(gt));
            ForwardNodes<float> fw;
            try {
                fw = forward(g, st, x);
            } catch (const std::runtime_error& e) {
                throw std::runtime_error("train: aborted at step " + std::to_string(step) +
                                         ": " + e.what());
            }
            LossNodes loss =
                total_loss(g, fw, y, gt_low, mcfg.depth, tcfg.lambda1, tcfg.lambda2);
            double lt = double(g.val(loss.total).v[0]);
            if (!std::isfinite(lt))
                throw std::runtime_error("train: non-finite loss at step " +
                                         std::to_string(step) + " (module: total_loss)");
            tot += lt;
            tl1 += double(g.val(loss.l1).v[0]);
            tls += double(g.val(loss.ls).v[0]);
            g.backward(op_scale(g, loss.total, 1.0 / tcfg.batch));
        }
        if (tcfg.grad_clip > 0) clip_grad_norm(st.store, tcfg.grad_clip);
        adam_step(st.store, lr, step);
        if (!st.store.all_finite())
            throw std::runtime_error("train: non-finite parameters after step " +
                                     std::to_string(step) + " (module: optimizer)");
        st.step = uint64_t(step);

        TrainReportRow row;
        row.step = step;
        row.total = tot / tcfg.batch;
        row.l1 = tl1 / tcfg.batch;
        row.ls = tls / tcfg.batch;
        row.lr = lr;
        row.elapsed_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (step % eval_every == 0 || step == tcfg.iters) run_eval(row);
        res.report.rows.push_back(row);
        if (step % ckpt_every == 0) save_ckpt("ckpt_step" + std::to_string(step) + ".spjf");
    }
    if (tcfg.iters > 0) save_ckpt("ckpt_final.spjf");
    return res;
}

struct ToggleSet {
    std::string name;
    std::vector<std::string> disabled;
};

struct AblateRow {
    std::string name;
    ModelConfig cfg;
    double psnr = 0, ssim = 0;
};

// Trains one model per toggle set under identical seeds and evaluates each on
// eval_pairs.
inline std::vector<AblateRow> ablate(const std::vector<ImagePair>& pairs,
                                     const std::vector<ImagePair>& eval_pairs,
                                     const ModelConfig& base, const TrainConfig& tcfg,
                                     const std::vector<ToggleSet>& sets) {
    for (size_t i = 0; i < sets.size(); ++i)
        for (size_t j = i + 1; j < sets.size(); ++j)
            if (sets[i].name == sets[j].name)
                throw std::invalid_argument("ablate: duplicate toggle-set name '" +
                                            sets[i].name + "'");
    std::vector<AblateRow> rows;
    for (const auto& set : sets) {
        ModelConfig cfg = base;
        for (const auto& t : set.disabled) {
            bool* flag = cfg.toggle(t);
            if (!flag) throw std::invalid_argument("ablate: unknown toggle '" + t + "'");
            *flag = false;
        }
        TrainResult r = train(pairs, cfg, tcfg, eval_pairs);
        AblateRow row;
        row.name = set.name;
        row.cfg = cfg;
        const auto& set_eval = eval_pairs.empty() ? pairs : eval_pairs;
        double ps = 0, ss = 0;
        for (const auto& [low, high] : set_eval) {
            Tensor out = infer(r.state, low);
            ps += std::min(psnr(out, high), 99.0);
            ss += ssim(out, high);
        }
        row.psnr = ps / double(set_eval.size());
        row.ssim = ss / double(set_eval.size());
        rows.push_back(row);
    }
    return rows;
}

inline void ablate_csv(const std::string& path, const std::vector<AblateRow>& rows) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("ablate_csv: cannot write " + path);
    os << "name";
    for (const auto& t : ModelConfig::toggle_names()) os << "," << t;
    os << ",psnr,ssim\n";
    char buf[64];
    for (const auto& r : rows) {
        os << r.name;
        ModelConfig cfg = r.cfg;
        for (const auto& t : ModelConfig::toggle_names()) os << "," << (*cfg.toggle(t) ? 1 : 0);
        std::snprintf(buf, sizeof buf, ",%.5f,%.6f", r.psnr, r.ssim);
        os << buf << "\n";
    }
}

}  // namespace spjf
