#pragma once

// Run configuration: a sectioned key=value text file covering model, train,
// data and output settings. Unknown sections or keys are rejected so typos
// in ablation sweeps fail loudly. The parsed config can be echoed back to
// text; echo -> parse is the identity.

#include <fstream>
#include <sstream>

#include "spjf/data.hpp"
#include "spjf/training.hpp"

namespace spjf {

struct DataConfig {
    std::string root;         // empty -> synthetic pairs
    int synth_count = 64;
    int synth_eval_count = 16;
    int synth_size = 64;
    SynthSpec synth;
};

struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    DataConfig data;
    std::string out_dir = "out";

    std::string to_text() const {
        std::ostringstream os;
        os << "[model]\n" << model.to_text();
        os << "[train]\n";
        os << "lr=" << train.lr << "\n";
        os << "milestones=";
        for (size_t i = 0; i < train.milestones.size(); ++i)
            os << (i ? "," : "") << train.milestones[i];
        os << "\nfull_scale_iters=" << train.full_scale_iters << "\ndecay=" << train.decay
           << "\nbatch=" << train.batch << "\ncrop=" << train.crop << "\niters=" << train.iters
           << "\nlambda1=" << train.lambda1 << "\nlambda2=" << train.lambda2
           << "\nseed=" << train.seed << "\neval_every=" << train.eval_every
           << "\nckpt_every=" << train.ckpt_every << "\ngrad_clip=" << train.grad_clip << "\n";
        os << "[data]\n";
        os << "root=" << data.root << "\nsynth_count=" << data.synth_count
           << "\nsynth_eval_count=" << data.synth_eval_count
           << "\nsynth_size=" << data.synth_size << "\nsynth_gamma_lo=" << data.synth.gamma_lo
           << "\nsynth_gamma_hi=" << data.synth.gamma_hi
           << "\nsynth_scale_lo=" << data.synth.scale_lo
           << "\nsynth_scale_hi=" << data.synth.scale_hi
           << "\nsynth_sigma_lo=" << data.synth.sigma_lo
           << "\nsynth_sigma_hi=" << data.synth.sigma_hi << "\nsynth_seed=" << data.synth.seed
           << "\n";
        os << "[output]\ndir=" << out_dir << "\n";
        return os.str();
    }

    static RunConfig parse(const std::string& text);
    static RunConfig parse_file(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw std::runtime_error("config: cannot open file '" + path + "'");
        std::stringstream ss;
        ss << is.rdbuf();
        return parse(ss.str());
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "1" || v == "true") return true;
    if (v == "0" || v == "false") return false;
    throw std::invalid_argument("config: bad boolean '" + v + "' for key '" + key + "'");
}

}  // namespace detail

inline RunConfig RunConfig::parse(const std::string& text) {
    RunConfig cfg;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = t.substr(1, t.size() - 2);
            if (section != "model" && section != "train" && section != "data" &&
                section != "output")
                throw std::invalid_argument("config: unknown section '" + section + "'");
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        " is not key=value: '" + t + "'");
        std::string key = detail::trim(t.substr(0, eq));
        std::string val = detail::trim(t.substr(eq + 1));
        auto bad_key = [&]() {
            throw std::invalid_argument("config: unknown key '" + key + "' in section [" +
                                        section + "]");
        };
        if (section == "model") {
            if (key == "depth")
                cfg.model.depth = std::stoi(val);
            else if (key == "channels")
                cfg.model.channels = std::stoi(val);
            else if (key == "w_s")
                cfg.model.w_s = std::stoi(val);
            else if (key == "w_l")
                cfg.model.w_l = std::stoi(val);
            else if (key == "w_h")
                cfg.model.w_h = std::stoi(val);
            else if (key == "n_res")
                cfg.model.n_res = std::stoi(val);
            else if (key == "token_cap")
                cfg.model.token_cap = std::stoi(val);
            else if (bool* t2 = cfg.model.toggle(key))
                *t2 = detail::parse_bool(val, key);
            else
                bad_key();
        } else if (section == "train") {
            if (key == "lr")
                cfg.train.lr = std::stod(val);
            else if (key == "milestones") {
                cfg.train.milestones.clear();
                std::istringstream ms(val);
                std::string tok;
                while (std::getline(ms, tok, ','))
                    if (!detail::trim(tok).empty())
                        cfg.train.milestones.push_back(std::stoll(detail::trim(tok)));
            } else if (key == "full_scale_iters")
                cfg.train.full_scale_iters = std::stoll(val);
            else if (key == "decay")
                cfg.train.decay = std::stod(val);
            else if (key == "batch")
                cfg.train.batch = std::stoi(val);
            else if (key == "crop")
                cfg.train.crop = std::stoi(val);
            else if (key == "iters")
                cfg.train.iters = std::stoll(val);
            else if (key == "lambda1")
                cfg.train.lambda1 = std::stod(val);
            else if (key == "lambda2")
                cfg.train.lambda2 = std::stod(val);
            else if (key == "seed")
                cfg.train.seed = std::stoull(val);
            else if (key == "eval_every")
                cfg.train.eval_every = std::stoll(val);
            else if (key == "ckpt_every")
                cfg.train.ckpt_every = std::stoll(val);
            else if (key == "grad_clip")
                cfg.train.grad_clip = std::stod(val);
            else
                bad_key();
        } else if (section == "data") {
            if (key == "root")
                cfg.data.root = val;
            else if (key == "synth_count")
                cfg.data.synth_count = std::stoi(val);
            else if (key == "synth_eval_count")
                cfg.data.synth_eval_count = std::stoi(val);
            else if (key == "synth_size")
                cfg.data.synth_size = std::stoi(val);
            else if (key == "synth_gamma_lo")
                cfg.data.synth.gamma_lo = std::stod(val);
            else if (key == "synth_gamma_hi")
                cfg.data.synth.gamma_hi = std::stod(val);
            else if (key == "synth_scale_lo")
                cfg.data.synth.scale_lo = std::stod(val);
            else if (key == "synth_scale_hi")
                cfg.data.synth.scale_hi = std::stod(val);
            else if (key == "synth_sigma_lo")
                cfg.data.synth.sigma_lo = std::stod(val);
            else if (key == "synth_sigma_hi")
                cfg.data.synth.sigma_hi = std::stod(val);
            else if (key == "synth_seed")
                cfg.data.synth.seed = std::stoull(val);
            else
                bad_key();
        } else if (section == "output") {
            if (key == "dir")
                cfg.out_dir = val;
            else
                bad_key();
        } else {
            throw std::invalid_argument("config: key '" + key + "' appears before any section");
        }
    }
    cfg.model.validate();
    cfg.train.validate();
    cfg.data.synth.validate();
    return cfg;
}

}  // namespace spjf
