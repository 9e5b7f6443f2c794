#pragma once

// Command-line front end: train / infer / eval / verify / ablate. Command
// handlers return process exit codes and are callable in-process (the test
// suite drives them directly through dispatch()).

#include <CLI11.hpp>
#include <iostream>

#include "spjf/verify.hpp"

namespace spjf::cli {

struct ResolvedData {
    std::vector<ImagePair> train, eval;
};

inline ResolvedData resolve_data(const DataConfig& dc) {
    namespace fs = std::filesystem;
    ResolvedData out;
    if (!dc.root.empty()) {
        if (fs::is_directory(fs::path(dc.root) / "train" / "low")) {
            out.train = load_pairs((fs::path(dc.root) / "train").string(), "train").pairs;
            if (fs::is_directory(fs::path(dc.root) / "test" / "low"))
                out.eval = load_pairs((fs::path(dc.root) / "test").string(), "test").pairs;
        } else {
            out.train = load_pairs(dc.root, "train").pairs;
        }
    } else {
        out.train = make_synth_dataset(dc.synth_count, dc.synth_size, dc.synth_size, dc.synth,
                                       dc.synth.seed * 2);
        out.eval = make_synth_dataset(dc.synth_eval_count, dc.synth_size, dc.synth_size,
                                      dc.synth, dc.synth.seed * 2 + 1);
    }
    return out;
}

inline int cmd_train(const std::string& config_path, long long iters_override,
                     long long seed_override) {
    try {
        RunConfig cfg = RunConfig::parse_file(config_path);
        if (iters_override >= 0) cfg.train.iters = iters_override;
        if (seed_override >= 0) cfg.train.seed = uint64_t(seed_override);
        ResolvedData data = resolve_data(cfg.data);
        std::filesystem::create_directories(cfg.out_dir);
        {
            std::ofstream echo(cfg.out_dir + "/run_config.ini");
            echo << cfg.to_text();
        }
        TrainResult res = train(data.train, cfg.model, cfg.train, data.eval, cfg.out_dir);
        res.report.to_csv(cfg.out_dir + "/report.csv");
        if (!res.report.rows.empty()) {
            const auto& last = res.report.rows.back();
            std::cout << "train: " << cfg.train.iters << " steps, final loss " << last.total
                      << ", eval psnr " << last.psnr << " dB, ssim " << last.ssim << "\n";
        } else {
            std::cout << "train: 0 steps, initial checkpoint written\n";
        }
        std::cout << "outputs in " << cfg.out_dir << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "train: " << e.what() << "\n";
        return 1;
    }
}

inline int cmd_infer(const std::string& ckpt_path, const std::string& input,
                     const std::string& output_dir) {
    namespace fs = std::filesystem;
    try {
        CheckpointData ck = load_checkpoint(ckpt_path);
        ModelConfig mc = ModelConfig::from_text(ck.config_text);
        auto st = build_model<float>(mc, 0);
        restore_params(st.store, ck);
        st.step = ck.step;

        std::vector<fs::path> inputs;
        if (fs::is_directory(input)) {
            for (const auto& e : fs::directory_iterator(input))
                if (e.is_regular_file() && e.path().extension() == ".png")
                    inputs.push_back(e.path());
            std::sort(inputs.begin(), inputs.end());
        } else {
            inputs.push_back(input);
        }
        if (inputs.empty()) {
            std::cerr << "infer: no .png inputs under " << input << "\n";
            return 1;
        }
        fs::create_directories(output_dir);
        for (const auto& p : inputs) {
            Tensor img = read_png(p.string());
            Tensor out = infer(st, img);
            write_png8((fs::path(output_dir) / p.filename()).string(), out);
        }
        std::cout << "infer: wrote " << inputs.size() << " image(s) to " << output_dir << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "infer: " << e.what() << "\n";
        return 1;
    }
}

inline int cmd_eval(const std::string& ckpt_path, const std::string& data_dir,
                    const std::string& csv_path) {
    try {
        CheckpointData ck = load_checkpoint(ckpt_path);
        ModelConfig mc = ModelConfig::from_text(ck.config_text);
        auto st = build_model<float>(mc, 0);
        restore_params(st.store, ck);
        PairedDataset ds = load_pairs(data_dir, "test");
        if (ds.pairs.empty()) {
            std::cerr << "eval: empty test set under " << data_dir << "\n";
            return 1;
        }
        std::ofstream csv(csv_path);
        if (!csv) throw std::runtime_error("cannot write " + csv_path);
        csv << "name,psnr,ssim\n";
        auto fmt = [](double v) {
            if (std::isinf(v)) return std::string("inf");
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.5f", v);
            return std::string(buf);
        };
        double sum_p = 0, sum_s = 0;
        bool any_inf = false;
        for (size_t i = 0; i < ds.pairs.size(); ++i) {
            Tensor out = quantize8(infer(st, ds.pairs[i].first));
            double p = psnr(out, ds.pairs[i].second);
            double s = ssim(out, ds.pairs[i].second);
            if (std::isinf(p))
                any_inf = true;
            else
                sum_p += p;
            sum_s += s;
            csv << ds.records[i].name << "," << fmt(p) << "," << fmt(s) << "\n";
            std::cout << ds.records[i].name << "  psnr=" << fmt(p) << "  ssim=" << fmt(s)
                      << "\n";
        }
        double mean_p = any_inf && sum_p == 0 ? std::numeric_limits<double>::infinity()
                                              : sum_p / double(ds.pairs.size());
        double mean_s = sum_s / double(ds.pairs.size());
        csv << "mean," << fmt(mean_p) << "," << fmt(mean_s) << "\n";
        std::cout << "mean  psnr=" << fmt(mean_p) << "  ssim=" << fmt(mean_s) << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "eval: " << e.what() << "\n";
        return 1;
    }
}

inline int cmd_verify(const std::string& report_path) {
    try {
        VerifyOptions opt;
        opt.report_path = report_path;
        return run_verify(opt, std::cout) ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "verify: " << e.what() << "\n";
        return 1;
    }
}

inline std::vector<ToggleSet> table4_sets() {
    return {{"D", {"smgm"}},          {"E", {"d_low"}},
            {"F", {"d_high"}},        {"G", {"smgm", "d_high"}},
            {"H", {"d_low", "d_high"}}, {"I", {"smgm", "d_low"}},
            {"J", {}}};
}

inline int cmd_ablate(const std::string& config_path,
                      const std::vector<std::string>& disable_lists, bool table4) {
    try {
        RunConfig cfg = RunConfig::parse_file(config_path);
        std::vector<ToggleSet> sets;
        for (const auto& list : disable_lists) {
            ToggleSet set;
            std::istringstream is(list);
            std::string tok;
            while (std::getline(is, tok, ','))
                if (!tok.empty()) set.disabled.push_back(tok);
            set.name = set.disabled.empty() ? "full" : list;
            sets.push_back(std::move(set));
        }
        if (table4) {
            auto t4 = table4_sets();
            sets.insert(sets.end(), t4.begin(), t4.end());
        }
        if (sets.empty()) sets.push_back({"full", {}});

        // validate toggle names before any training happens
        ModelConfig probe;
        for (const auto& s : sets)
            for (const auto& t : s.disabled)
                if (!probe.toggle(t)) {
                    std::string valid;
                    for (const auto& n : ModelConfig::toggle_names()) valid += n + " ";
                    std::cerr << "ablate: unknown toggle '" << t << "'; valid toggles: " << valid
                              << "\n";
                    return 1;
                }

        ResolvedData data = resolve_data(cfg.data);
        auto rows = ablate(data.train, data.eval, cfg.model, cfg.train, sets);
        std::filesystem::create_directories(cfg.out_dir);
        std::string csv = cfg.out_dir + "/ablation.csv";
        ablate_csv(csv, rows);
        for (const auto& r : rows)
            std::cout << r.name << "  psnr=" << r.psnr << "  ssim=" << r.ssim << "\n";
        std::cout << "ablate: wrote " << csv << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "ablate: " << e.what() << "\n";
        return 1;
    }
}

inline int dispatch(std::vector<std::string> args) {
    CLI::App app{"SPJFNet: self-mining prior-guided joint frequency enhancement"};
    app.require_subcommand(1);

    auto* tr = app.add_subcommand("train", "train a model from a run config");
    std::string tr_config;
    long long tr_iters = -1, tr_seed = -1;
    tr->add_option("--config", tr_config, "run config path")->required();
    tr->add_option("--iters", tr_iters, "override train.iters");
    tr->add_option("--seed", tr_seed, "override train.seed");

    auto* in = app.add_subcommand("infer", "enhance image(s) with a checkpoint");
    std::string in_ckpt, in_input, in_output;
    in->add_option("--ckpt", in_ckpt)->required();
    in->add_option("--input", in_input, "png file or directory")->required();
    in->add_option("--output", in_output, "output directory")->required();

    auto* ev = app.add_subcommand("eval", "PSNR/SSIM over a paired directory");
    std::string ev_ckpt, ev_data, ev_csv = "eval.csv";
    ev->add_option("--ckpt", ev_ckpt)->required();
    ev->add_option("--data", ev_data, "directory with low/ and high/")->required();
    ev->add_option("--output", ev_csv, "metrics csv path");

    auto* vf = app.add_subcommand("verify", "run the invariant suite");
    std::string vf_report;
    vf->add_option("--report", vf_report, "also write the report to this path");

    auto* ab = app.add_subcommand("ablate", "train & evaluate module-toggle variants");
    std::string ab_config;
    std::vector<std::string> ab_disable;
    bool ab_table4 = false;
    ab->add_option("--config", ab_config)->required();
    ab->add_option("--disable", ab_disable,
                   "comma-separated toggles to disable (one row per occurrence)");
    ab->add_flag("--table4", ab_table4, "add the standard core-component rows D..J");

    try {
        std::vector<const char*> argv;
        argv.push_back("spjf");
        for (const auto& a : args) argv.push_back(a.c_str());
        app.parse(int(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (tr->parsed()) return cmd_train(tr_config, tr_iters, tr_seed);
    if (in->parsed()) return cmd_infer(in_ckpt, in_input, in_output);
    if (ev->parsed()) return cmd_eval(ev_ckpt, ev_data, ev_csv);
    if (vf->parsed()) return cmd_verify(vf_report);
    if (ab->parsed()) return cmd_ablate(ab_config, ab_disable, ab_table4);
    return 1;
}

}  // namespace spjf::cli
