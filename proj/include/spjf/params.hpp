#pragma once

// Parameter initialization, the Adam update, and the checkpoint container.
//
// Checkpoint layout (little-endian):
//   "SPJF" | u32 version | u64 step | u32 cfg_len | cfg text
//   u32 param_count | { u16 name_len | name | u32 dims[4] | f32 data[] } ...
// Parameter arrays are stored as 32-bit floats regardless of the compute
// scalar.

#include <cstdio>
#include <cstring>
#include <fstream>

#include "spjf/graph.hpp"

namespace spjf {

// fan-in scaled uniform init; biases start at zero
template <class T>
int add_conv_param(ParamStore<T>& store, const std::string& name, int kh, int kw, int cin,
                   int cout, std::mt19937_64& rng) {
    TensorT<T> w(kh, kw, cin, cout);
    double bound = std::sqrt(6.0 / (double(kh) * kw * cin));
    fill_uniform(w, rng, -bound, bound);
    return store.add(name, std::move(w));
}

template <class T>
int add_bias_param(ParamStore<T>& store, const std::string& name, int c) {
    return store.add(name, TensorT<T>(1, 1, c));
}

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam step; t is 1-based.
template <class T>
void adam_step(ParamStore<T>& store, double lr, long long t, const AdamConfig& ac = {}) {
    const double bc1 = 1.0 - std::pow(ac.beta1, double(t));
    const double bc2 = 1.0 - std::pow(ac.beta2, double(t));
    for (auto& e : store.entries) {
        for (size_t i = 0; i < e.value.v.size(); ++i) {
            double gv = double(e.grad.v[i]);
            double m = ac.beta1 * double(e.m.v[i]) + (1.0 - ac.beta1) * gv;
            double v = ac.beta2 * double(e.v.v[i]) + (1.0 - ac.beta2) * gv * gv;
            e.m.v[i] = T(m);
            e.v.v[i] = T(v);
            e.value.v[i] -= T(lr * (m / bc1) / (std::sqrt(v / bc2) + ac.eps));
        }
    }
}

// Scales gradients so their global L2 norm is at most max_norm.
template <class T>
void clip_grad_norm(ParamStore<T>& store, double max_norm) {
    double sq = 0;
    for (auto& e : store.entries)
        for (T gv : e.grad.v) sq += double(gv) * double(gv);
    double norm = std::sqrt(sq);
    if (norm <= max_norm || norm == 0) return;
    double k = max_norm / norm;
    for (auto& e : store.entries)
        for (auto& gv : e.grad.v) gv = T(double(gv) * k);
}

namespace detail {

template <class V>
void write_pod(std::ostream& os, const V& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(V));
}
template <class V>
void read_pod(std::istream& is, V& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(V));
}

}  // namespace detail

inline constexpr uint32_t kCheckpointVersion = 1;

template <class T>
void save_checkpoint(const std::string& path, const std::string& config_text,
                     const ParamStore<T>& store, uint64_t step) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);
    os.write("SPJF", 4);
    detail::write_pod(os, kCheckpointVersion);
    detail::write_pod(os, step);
    detail::write_pod(os, uint32_t(config_text.size()));
    os.write(config_text.data(), std::streamsize(config_text.size()));
    detail::write_pod(os, uint32_t(store.entries.size()));
    for (const auto& e : store.entries) {
        detail::write_pod(os, uint16_t(e.name.size()));
        os.write(e.name.data(), std::streamsize(e.name.size()));
        uint32_t dims[4] = {uint32_t(e.value.n), uint32_t(e.value.h), uint32_t(e.value.w),
                            uint32_t(e.value.c)};
        os.write(reinterpret_cast<const char*>(dims), sizeof(dims));
        for (T x : e.value.v) {
            float f = float(x);
            detail::write_pod(os, f);
        }
    }
    if (!os) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

struct CheckpointData {
    uint64_t step = 0;
    std::string config_text;
    std::vector<std::pair<std::string, TensorT<float>>> params;
};

inline CheckpointData load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "SPJF", 4) != 0)
        throw std::runtime_error("load_checkpoint: " + path + " is not a SPJF checkpoint");
    uint32_t version = 0;
    detail::read_pod(is, version);
    if (version != kCheckpointVersion)
        throw std::runtime_error("load_checkpoint: unsupported version " +
                                 std::to_string(version));
    CheckpointData out;
    detail::read_pod(is, out.step);
    uint32_t cfg_len = 0;
    detail::read_pod(is, cfg_len);
    out.config_text.resize(cfg_len);
    is.read(out.config_text.data(), cfg_len);
    uint32_t count = 0;
    detail::read_pod(is, count);
    for (uint32_t i = 0; i < count; ++i) {
        uint16_t nlen = 0;
        detail::read_pod(is, nlen);
        std::string name(nlen, '\0');
        is.read(name.data(), nlen);
        uint32_t dims[4];
        is.read(reinterpret_cast<char*>(dims), sizeof(dims));
        TensorT<float> t{int(dims[0]), int(dims[1]), int(dims[2]), int(dims[3])};
        is.read(reinterpret_cast<char*>(t.v.data()), std::streamsize(t.v.size() * 4));
        if (!is)
            throw std::runtime_error("load_checkpoint: truncated parameter data at '" + name +
                                     "'");
        out.params.emplace_back(std::move(name), std::move(t));
    }
    return out;
}

// Copy loaded arrays into a freshly built store; shapes must line up.
template <class T>
void restore_params(ParamStore<T>& store, const CheckpointData& ck) {
    if (store.entries.size() != ck.params.size())
        throw std::runtime_error("restore_params: checkpoint has " +
                                 std::to_string(ck.params.size()) + " tensors, model expects " +
                                 std::to_string(store.entries.size()));
    for (size_t i = 0; i < ck.params.size(); ++i) {
        auto& e = store.entries[i];
        const auto& [name, t] = ck.params[i];
        if (e.name != name)
            throw std::runtime_error("restore_params: name mismatch at index " +
                                     std::to_string(i) + ": '" + name + "' vs '" + e.name + "'");
        if (e.value.n != t.n || e.value.h != t.h || e.value.w != t.w || e.value.c != t.c)
            throw std::runtime_error("restore_params: shape mismatch for '" + name + "': " +
                                     t.shape_str() + " vs " + e.value.shape_str());
        for (size_t j = 0; j < t.v.size(); ++j) e.value.v[j] = T(t.v[j]);
    }
}

}  // namespace spjf
