#include "rlmesh/rlmesh.h"

#include "config.hpp"
#include "harness.hpp"
#include "plot.hpp"
#include "reward.hpp"
#include "solvers.hpp"

#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

thread_local std::string g_last_error;

template <typename Fn>
rlm_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return RLM_OK;
    } catch (const std::invalid_argument& e) {
        g_last_error = e.what();
        return RLM_ERR_INVALID_ARGUMENT;
    } catch (const std::runtime_error& e) {
        g_last_error = e.what();
        return RLM_ERR_RUNTIME;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return RLM_ERR_RUNTIME;
    }
}

rlm_status null_arg(const char* what) {
    g_last_error = std::string("null argument: ") + what;
    return RLM_ERR_NULL_POINTER;
}

}  // namespace

struct rlm_config {
    rlmesh::FullConfig cfg;
};

extern "C" {

const char* rlm_version(void) { return "0.1.0"; }

const char* rlm_last_error(void) { return g_last_error.c_str(); }

rlm_status rlm_config_create(const char* problem_kind, rlm_config** out) {
    if (!problem_kind || !out) return null_arg("rlm_config_create");
    return guarded([&] {
        auto cfg = rlmesh::default_config(rlmesh::problem_kind_from_name(problem_kind));
        *out = new rlm_config{std::move(cfg)};
    });
}

rlm_status rlm_config_load(const char* path, rlm_config** out) {
    if (!path || !out) return null_arg("rlm_config_load");
    return guarded([&] { *out = new rlm_config{rlmesh::load_config(path)}; });
}

rlm_status rlm_config_save(const rlm_config* cfg, const char* path) {
    if (!cfg || !path) return null_arg("rlm_config_save");
    return guarded([&] { rlmesh::save_config(cfg->cfg, path); });
}

rlm_status rlm_config_apply_preset(rlm_config* cfg, const char* preset) {
    if (!cfg || !preset) return null_arg("rlm_config_apply_preset");
    return guarded([&] {
        rlmesh::apply_preset(cfg->cfg, preset);
        cfg->cfg.validate();
    });
}

rlm_status rlm_config_set_method(rlm_config* cfg, const char* method) {
    if (!cfg || !method) return null_arg("rlm_config_set_method");
    return guarded([&] { cfg->cfg.run.method = rlmesh::method_from_name(method); });
}

rlm_status rlm_config_set_seed(rlm_config* cfg, uint64_t seed) {
    if (!cfg) return null_arg("rlm_config_set_seed");
    cfg->cfg.run.seeds = {seed};
    return RLM_OK;
}

rlm_status rlm_config_set_master_seed(rlm_config* cfg, uint64_t master_seed) {
    if (!cfg) return null_arg("rlm_config_set_master_seed");
    cfg->cfg.run.master_seed = master_seed;
    return RLM_OK;
}

void rlm_config_free(rlm_config* cfg) { delete cfg; }

rlm_status rlm_gen_data(const rlm_config* cfg, const char* out_dir, int force) {
    if (!cfg || !out_dir) return null_arg("rlm_gen_data");
    return guarded([&] { rlmesh::flow_gen_data(cfg->cfg, out_dir, force != 0); });
}

rlm_status rlm_pretrain(const rlm_config* cfg, const char* data_dir, const char* out_dir,
                        int force) {
    if (!cfg || !data_dir || !out_dir) return null_arg("rlm_pretrain");
    return guarded([&] { rlmesh::flow_pretrain(cfg->cfg, data_dir, out_dir, force != 0); });
}

rlm_status rlm_run(const rlm_config* cfg, const char* data_dir, const char* out_dir, int force) {
    if (!cfg || !data_dir || !out_dir) return null_arg("rlm_run");
    return guarded([&] { rlmesh::flow_run(cfg->cfg, data_dir, out_dir, force != 0); });
}

rlm_status rlm_sweep(const rlm_config* cfg, const char* data_dir, const char* out_dir,
                     int force) {
    if (!cfg || !data_dir || !out_dir) return null_arg("rlm_sweep");
    return guarded([&] { rlmesh::flow_sweep(cfg->cfg, data_dir, out_dir, force != 0); });
}

rlm_status rlm_plot_curves(const char* results_dir, const char* problem, const char* out_svg) {
    if (!results_dir || !problem || !out_svg) return null_arg("rlm_plot_curves");
    return guarded([&] { rlmesh::plot_curves(results_dir, problem, out_svg); });
}

rlm_status rlm_plot_overlay(const char* results_dir, const char* data_dir, const char* problem,
                            const char* method, const char* out_svg) {
    if (!results_dir || !data_dir || !problem || !method || !out_svg)
        return null_arg("rlm_plot_overlay");
    return guarded(
        [&] { rlmesh::plot_selection_overlay(results_dir, data_dir, problem, method, out_svg); });
}

rlm_status rlm_validate_solver(const rlm_config* cfg, int instances, const char* out_csv,
                               double* mae_mean, double* mae_std, double* rmse) {
    if (!cfg) return null_arg("rlm_validate_solver");
    return guarded([&] {
        auto v = rlmesh::flow_validate_solver(cfg->cfg, instances,
                                              out_csv ? std::string(out_csv) : std::string());
        if (mae_mean) *mae_mean = v.mae_mean;
        if (mae_std) *mae_std = v.mae_std;
        if (rmse) *rmse = v.rmse;
    });
}

rlm_status rlm_scale_reward(double raw, double* out) {
    if (!out) return null_arg("rlm_scale_reward");
    return guarded([&] { *out = rlmesh::scale_reward(raw); });
}

rlm_status rlm_rmse(const double* predictions, const double* truths, size_t len, double* out) {
    if (!predictions || !truths || !out) return null_arg("rlm_rmse");
    return guarded([&] {
        rlmesh::Field p, t;
        p.values.assign(predictions, predictions + len);
        t.values.assign(truths, truths + len);
        *out = rlmesh::rmse({p}, {t});
    });
}

rlm_status rlm_spearman(const double* xs, const double* ys, size_t len, double* out) {
    if (!xs || !ys || !out) return null_arg("rlm_spearman");
    return guarded([&] {
        *out = rlmesh::spearman(std::vector<double>(xs, xs + len),
                                std::vector<double>(ys, ys + len));
    });
}

rlm_status rlm_van_leer(double slope_ratio, double* out) {
    if (!out) return null_arg("rlm_van_leer");
    return guarded([&] { *out = rlmesh::van_leer_limiter(slope_ratio); });
}

}  // extern "C"
