#pragma once

// Synthetic paired data for desk-scale runs and paired-directory ingestion.

#include <algorithm>
#include <filesystem>

#include "spjf/png_io.hpp"
#include "spjf/tensor.hpp"

namespace spjf {

struct SynthSpec {
    double gamma_lo = 2.0, gamma_hi = 4.0;    // darkening exponent
    double scale_lo = 0.1, scale_hi = 0.5;    // brightness multiplier
    double sigma_lo = 0.0, sigma_hi = 0.02;   // Gaussian noise stddev
    uint64_t seed = 0;

    void validate() const {
        if (gamma_lo > gamma_hi || scale_lo > scale_hi || sigma_lo > sigma_hi)
            throw std::invalid_argument("SynthSpec: ranges must be ordered");
        if (sigma_lo < 0) throw std::invalid_argument("SynthSpec: sigma must be >= 0");
    }
};

// dark = clip(clean^gamma * s + noise, 0, 1); gamma, s, sigma drawn from
// (spec.seed, seed).
template <class T>
TensorT<T> synth_dark(const TensorT<T>& clean, const SynthSpec& spec, uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(spec.seed * 0x9E3779B97F4A7C15ULL + seed);
    std::uniform_real_distribution<double> dg(spec.gamma_lo, spec.gamma_hi);
    std::uniform_real_distribution<double> ds(spec.scale_lo, spec.scale_hi);
    std::uniform_real_distribution<double> dn(spec.sigma_lo, spec.sigma_hi);
    const double gamma = dg(rng), s = ds(rng), sigma = dn(rng);
    std::normal_distribution<double> noise(0.0, 1.0);
    TensorT<T> dark = clean;
    for (auto& x : dark.v) {
        double v = std::pow(double(x), gamma) * s;
        if (sigma > 0) v += sigma * noise(rng);
        x = T(std::min(1.0, std::max(0.0, v)));
    }
    return dark;
}

// Procedural "well-lit" test image: smooth color field plus a few hard-edged
// shapes and a light sinusoidal texture.
template <class T>
TensorT<T> procedural_image(int h, int w, int c, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    TensorT<T> img(h, w, c);
    std::vector<double> base(static_cast<size_t>(c)), gx(static_cast<size_t>(c)), gy(static_cast<size_t>(c)), ph(static_cast<size_t>(c));
    for (int ch = 0; ch < c; ++ch) {
        base[size_t(ch)] = 0.35 + 0.45 * u01(rng);
        gx[size_t(ch)] = (u01(rng) - 0.5) * 0.5;
        gy[size_t(ch)] = (u01(rng) - 0.5) * 0.5;
        ph[size_t(ch)] = u01(rng) * 6.28318530717958647;
    }
    double fx = 2.0 + 6.0 * u01(rng), fy = 2.0 + 6.0 * u01(rng);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch) {
                double v = base[size_t(ch)] + gx[size_t(ch)] * x / w + gy[size_t(ch)] * y / h;
                v += 0.06 * std::sin(fx * 6.2831853 * x / w + fy * 6.2831853 * y / h +
                                     ph[size_t(ch)]);
                img.at(y, x, ch) = T(v);
            }
    const int shapes = 2 + int(u01(rng) * 3);
    for (int s = 0; s < shapes; ++s) {
        bool rect = u01(rng) < 0.5;
        double cx = u01(rng) * w, cy = u01(rng) * h;
        double rx = (0.08 + 0.2 * u01(rng)) * w, ry = (0.08 + 0.2 * u01(rng)) * h;
        std::vector<double> delta(static_cast<size_t>(c));
        for (int ch = 0; ch < c; ++ch) delta[size_t(ch)] = (u01(rng) - 0.5) * 0.7;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                bool inside;
                if (rect)
                    inside = std::abs(x - cx) < rx && std::abs(y - cy) < ry;
                else {
                    double dx = (x - cx) / rx, dy = (y - cy) / ry;
                    inside = dx * dx + dy * dy < 1.0;
                }
                if (inside)
                    for (int ch = 0; ch < c; ++ch) img.at(y, x, ch) += T(delta[size_t(ch)]);
            }
    }
    for (auto& x : img.v) x = T(std::min(0.98, std::max(0.02, double(x))));
    return img;
}

using ImagePair = std::pair<Tensor, Tensor>;  // (low, high)

inline std::vector<ImagePair> make_synth_dataset(int count, int h, int w, const SynthSpec& spec,
                                                 uint64_t seed) {
    std::vector<ImagePair> out;
    out.reserve(size_t(count));
    for (int i = 0; i < count; ++i) {
        Tensor clean = procedural_image<float>(h, w, 3, seed * 1000003ULL + uint64_t(i));
        Tensor dark = synth_dark(clean, spec, seed * 7919ULL + uint64_t(i));
        out.emplace_back(std::move(dark), std::move(clean));
    }
    return out;
}

struct PairedDataset {
    struct Record {
        std::string name;
        std::string low_path, high_path;
    };
    std::vector<Record> records;
    std::vector<ImagePair> pairs;
    std::string split;
};

// root must contain low/ and high/ with filename-matched PNG pairs.
inline PairedDataset load_pairs(const std::string& root, const std::string& split) {
    namespace fs = std::filesystem;
    PairedDataset ds;
    ds.split = split;
    fs::path low_dir = fs::path(root) / "low", high_dir = fs::path(root) / "high";
    if (!fs::is_directory(low_dir) || !fs::is_directory(high_dir))
        throw std::runtime_error("load_pairs: " + root + " must contain low/ and high/");
    std::vector<std::string> low_names, high_names;
    for (const auto& e : fs::directory_iterator(low_dir))
        if (e.is_regular_file()) low_names.push_back(e.path().filename().string());
    for (const auto& e : fs::directory_iterator(high_dir))
        if (e.is_regular_file()) high_names.push_back(e.path().filename().string());
    std::sort(low_names.begin(), low_names.end());
    std::sort(high_names.begin(), high_names.end());
    for (const auto& n : low_names)
        if (!std::binary_search(high_names.begin(), high_names.end(), n))
            throw std::runtime_error("load_pairs: no high/ match for '" + n + "'");
    for (const auto& n : high_names)
        if (!std::binary_search(low_names.begin(), low_names.end(), n))
            throw std::runtime_error("load_pairs: no low/ match for '" + n + "'");
    for (const auto& n : low_names) {
        PairedDataset::Record r{n, (low_dir / n).string(), (high_dir / n).string()};
        Tensor low = read_png(r.low_path);
        Tensor high = read_png(r.high_path);
        if (low.h != high.h || low.w != high.w || low.c != high.c)
            throw std::runtime_error("load_pairs: shape mismatch within pair '" + n + "'");
        ds.records.push_back(std::move(r));
        ds.pairs.emplace_back(std::move(low), std::move(high));
    }
    return ds;
}

}  // namespace spjf
