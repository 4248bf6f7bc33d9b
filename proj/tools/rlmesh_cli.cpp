// Command-line driver over the rlmesh C API.
//
//   rlmesh gen-data        --config cfg.json --out data/ [--force]
//   rlmesh pretrain        --config cfg.json --data data/ --out runs/ [--force]
//   rlmesh run             --config cfg.json --data data/ --out runs/ [--force]
//   rlmesh sweep           --config cfg.json --data data/ --out runs/ [--force]
//   rlmesh plot            --results runs/ --problem burgers --out curves.svg
//                          [--overlay --data data/ --method rlmesh]
//   rlmesh validate-solver --config cfg.json [--instances 50] [--out report.csv]
//
// Every command accepts --preset {desk, paper}, --seed N (single-seed
// override) and --method NAME where meaningful.

#include "rlmesh/rlmesh.h"

#include "CLI11.hpp"

#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>

namespace {

struct ConfigHandle {
    rlm_config* cfg = nullptr;
    ~ConfigHandle() { rlm_config_free(cfg); }
};

int fail(const char* what, rlm_status status) {
    std::fprintf(stderr, "rlmesh: %s failed (%d): %s\n", what, int(status), rlm_last_error());
    return 1;
}

int load_config(ConfigHandle& handle, const std::string& path, const std::string& preset,
                const std::string& method, bool have_seed, std::uint64_t seed) {
    rlm_status st = rlm_config_load(path.c_str(), &handle.cfg);
    if (st != RLM_OK) return fail("config load", st);
    if (!preset.empty()) {
        st = rlm_config_apply_preset(handle.cfg, preset.c_str());
        if (st != RLM_OK) return fail("preset", st);
    }
    if (!method.empty()) {
        st = rlm_config_set_method(handle.cfg, method.c_str());
        if (st != RLM_OK) return fail("method", st);
    }
    if (have_seed) {
        st = rlm_config_set_seed(handle.cfg, seed);
        if (st != RLM_OK) return fail("seed", st);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rlmesh: budgeted active acquisition for PDE surrogates"};
    app.require_subcommand(1);

    std::string config_path, out_path, data_path, results_path, preset, method, problem;
    bool force = false, overlay = false;
    std::uint64_t seed = 0;
    int instances = 50;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        if (needs_config)
            cmd->add_option("--config", config_path, "config JSON path")->required();
        cmd->add_option("--preset", preset, "desk or paper");
        cmd->add_option("--seed", seed, "replace the seed list with one seed");
    };

    auto* gen = app.add_subcommand("gen-data", "generate the instance corpus");
    add_common(gen, true);
    gen->add_option("--out", out_path, "data directory")->required();
    gen->add_flag("--force", force, "overwrite an existing corpus");

    auto* pre = app.add_subcommand("pretrain", "imitation-pretrain the agent");
    add_common(pre, true);
    pre->add_option("--data", data_path, "data directory")->required();
    pre->add_option("--out", out_path, "results directory")->required();
    pre->add_flag("--force", force, "retrain even if checkpoints exist");

    auto* run = app.add_subcommand("run", "run active learning for one method");
    add_common(run, true);
    run->add_option("--method", method, "override run.method");
    run->add_option("--data", data_path, "data directory")->required();
    run->add_option("--out", out_path, "results directory")->required();
    run->add_flag("--force", force, "discard existing run state");

    auto* sweep = app.add_subcommand("sweep", "per-instance budget sweep");
    add_common(sweep, true);
    sweep->add_option("--data", data_path, "data directory")->required();
    sweep->add_option("--out", out_path, "results directory")->required();
    sweep->add_flag("--force", force, "discard existing sweep state");

    auto* plot = app.add_subcommand("plot", "render curves or selection overlays");
    plot->add_option("--results", results_path, "results directory")->required();
    plot->add_option("--problem", problem, "problem name")->required();
    plot->add_option("--out", out_path, "output SVG path")->required();
    plot->add_flag("--overlay", overlay, "selection overlay instead of curves");
    plot->add_option("--data", data_path, "data directory (overlay mode)");
    plot->add_option("--method", method, "method for the overlay (default rlmesh)");

    auto* val = app.add_subcommand("validate-solver", "nonuniform solver fidelity check");
    add_common(val, true);
    val->add_option("--instances", instances, "number of validation instances");
    val->add_option("--out", out_path, "per-instance CSV path");

    CLI11_PARSE(app, argc, argv);
    bool have_seed = app.count_all() && (gen->count("--seed") || pre->count("--seed") ||
                                         run->count("--seed") || sweep->count("--seed") ||
                                         val->count("--seed"));

    if (gen->parsed()) {
        ConfigHandle h;
        if (int rc = load_config(h, config_path, preset, "", have_seed, seed)) return rc;
        rlm_status st = rlm_gen_data(h.cfg, out_path.c_str(), force);
        if (st != RLM_OK) return fail("gen-data", st);
        std::printf("corpus written under %s\n", out_path.c_str());
        return 0;
    }
    if (pre->parsed()) {
        ConfigHandle h;
        if (int rc = load_config(h, config_path, preset, "", have_seed, seed)) return rc;
        rlm_status st = rlm_pretrain(h.cfg, data_path.c_str(), out_path.c_str(), force);
        if (st != RLM_OK) return fail("pretrain", st);
        std::printf("pretraining checkpoints written under %s\n", out_path.c_str());
        return 0;
    }
    if (run->parsed()) {
        ConfigHandle h;
        if (int rc = load_config(h, config_path, preset, method, have_seed, seed)) return rc;
        rlm_status st = rlm_run(h.cfg, data_path.c_str(), out_path.c_str(), force);
        if (st != RLM_OK) return fail("run", st);
        std::printf("run results written under %s\n", out_path.c_str());
        return 0;
    }
    if (sweep->parsed()) {
        ConfigHandle h;
        if (int rc = load_config(h, config_path, preset, method, have_seed, seed)) return rc;
        rlm_status st = rlm_sweep(h.cfg, data_path.c_str(), out_path.c_str(), force);
        if (st != RLM_OK) return fail("sweep", st);
        std::printf("sweep results written under %s\n", out_path.c_str());
        return 0;
    }
    if (plot->parsed()) {
        rlm_status st;
        if (overlay) {
            if (data_path.empty()) {
                std::fprintf(stderr, "rlmesh: --overlay requires --data\n");
                return 1;
            }
            if (method.empty()) method = "rlmesh";
            st = rlm_plot_overlay(results_path.c_str(), data_path.c_str(), problem.c_str(),
                                  method.c_str(), out_path.c_str());
        } else {
            st = rlm_plot_curves(results_path.c_str(), problem.c_str(), out_path.c_str());
        }
        if (st != RLM_OK) return fail("plot", st);
        std::printf("wrote %s\n", out_path.c_str());
        return 0;
    }
    if (val->parsed()) {
        ConfigHandle h;
        if (int rc = load_config(h, config_path, preset, "", have_seed, seed)) return rc;
        double mae = 0, mae_std = 0, rmse = 0;
        rlm_status st = rlm_validate_solver(h.cfg, instances,
                                            out_path.empty() ? nullptr : out_path.c_str(),
                                            &mae, &mae_std, &rmse);
        if (st != RLM_OK) return fail("validate-solver", st);
        std::printf("solver validation over %d instances: MAE %.6e +/- %.6e, RMSE %.6e\n",
                    instances, mae, mae_std, rmse);
        return 0;
    }
    return 1;
}
