/* rlmesh: budgeted active-acquisition laboratory for PDE surrogates.
 *
 * C interface over the C++ core. All entry points return rlm_status; on any
 * failure rlm_last_error() describes the problem for the calling thread.
 * Handles are opaque and freed with their matching *_free function.
 */
#ifndef RLMESH_RLMESH_H
#define RLMESH_RLMESH_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rlm_status {
    RLM_OK = 0,
    RLM_ERR_INVALID_ARGUMENT = 1,
    RLM_ERR_IO = 2,
    RLM_ERR_RUNTIME = 3,
    RLM_ERR_NULL_POINTER = 4
} rlm_status;

/* Library version string, e.g. "0.1.0". */
const char* rlm_version(void);

/* Message for the most recent failure on this thread; empty if none. */
const char* rlm_last_error(void);

/* ---- configuration ------------------------------------------------------ */

typedef struct rlm_config rlm_config;

/* problem_kind: "burgers" | "darcy" | "lorenz96" */
rlm_status rlm_config_create(const char* problem_kind, rlm_config** out);
rlm_status rlm_config_load(const char* path, rlm_config** out);
rlm_status rlm_config_save(const rlm_config* cfg, const char* path);
/* preset: "desk" | "paper" */
rlm_status rlm_config_apply_preset(rlm_config* cfg, const char* preset);
rlm_status rlm_config_set_method(rlm_config* cfg, const char* method);
/* Replaces the seed list with the single given seed. */
rlm_status rlm_config_set_seed(rlm_config* cfg, uint64_t seed);
rlm_status rlm_config_set_master_seed(rlm_config* cfg, uint64_t master_seed);
void rlm_config_free(rlm_config* cfg);

/* ---- pipeline flows ------------------------------------------------------ */

/* Corpus + manifest into out_dir; refuses to overwrite unless force. */
rlm_status rlm_gen_data(const rlm_config* cfg, const char* out_dir, int force);

/* Imitation-pretrains one agent per configured seed. */
rlm_status rlm_pretrain(const rlm_config* cfg, const char* data_dir, const char* out_dir,
                        int force);

/* Active-learning runs for the configured method and seeds. An interrupted
 * run resumes from its checkpoint when invoked again without force. */
rlm_status rlm_run(const rlm_config* cfg, const char* data_dir, const char* out_dir, int force);

/* Per-budget runs per the config's sweep section. */
rlm_status rlm_sweep(const rlm_config* cfg, const char* data_dir, const char* out_dir,
                     int force);

/* Mean +/- std RMSE curves as SVG. */
rlm_status rlm_plot_curves(const char* results_dir, const char* problem, const char* out_svg);

/* Selected-index overlay on input fields (1D problems). */
rlm_status rlm_plot_overlay(const char* results_dir, const char* data_dir, const char* problem,
                            const char* method, const char* out_svg);

/* Nonuniform-vs-dense solver validation on oracle-policy subsets (Burgers).
 * out_csv may be NULL; mae/rmse outputs may be NULL. */
rlm_status rlm_validate_solver(const rlm_config* cfg, int instances, const char* out_csv,
                               double* mae_mean, double* mae_std, double* rmse);

/* ---- small numeric surface ----------------------------------------------- */

rlm_status rlm_scale_reward(double raw, double* out);
rlm_status rlm_rmse(const double* predictions, const double* truths, size_t len, double* out);
rlm_status rlm_spearman(const double* xs, const double* ys, size_t len, double* out);
rlm_status rlm_van_leer(double slope_ratio, double* out);

#ifdef __cplusplus
}
#endif

#endif /* RLMESH_RLMESH_H */
