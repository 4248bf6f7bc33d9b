#pragma once

#include "config.hpp"
#include "core.hpp"
#include "generators.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rlmesh {

struct CurvePoint {
    int iteration = 0;
    long cumulative_samples = 0;
    double rmse = 0.0;
    double solver_seconds_cum = 0.0;
    std::uint64_t seed = 0;
};

struct RunResult {
    std::vector<CurvePoint> curve;
    double pretrain_rmse = 0.0;
    long solver_queries = 0;   // pretrain + acquisition mask points
    bool completed = false;    // false when stopped early by stop_after_iteration
};

/// Before/after proxy RMSE slice used for rewards: last train-corpus
/// instances outside pretrain and acquisition pool; falls back to the tail of
/// the pretrain block when the pool reaches the corpus end.
std::vector<int> proxy_holdout_indices(const RunConfig& run);

/// One seed of Algorithm-style active learning. Writes curve.csv,
/// rewards.csv, selections.csv, training.csv, manifest.json and a resumable
/// checkpoint under run_dir. agent_checkpoint is required for method rlmesh.
RunResult run_active_learning_seed(const FullConfig& cfg, const Corpus& corpus,
                                   std::uint64_t seed, const std::string& run_dir,
                                   const std::string& agent_checkpoint);

/// All configured seeds; results keyed by seed.
std::map<std::uint64_t, RunResult> run_active_learning(const FullConfig& cfg,
                                                       const Corpus& corpus,
                                                       const std::string& method_dir,
                                                       const std::string& pretrain_dir);

struct AggRow {
    std::string method;
    int iteration = 0;
    double mean = 0.0;
    double stddev = 0.0;
};

/// Per-iteration mean and sample std per method; seed counts must agree
/// across methods.
std::vector<AggRow> aggregate(
    const std::map<std::string, std::vector<std::vector<CurvePoint>>>& curves_by_method);

/// First iteration k with rmse <= tau, or nullopt.
std::optional<int> iterations_to_threshold(const std::vector<CurvePoint>& curve, double tau);

struct SweepResult {
    // budget -> seed -> curve
    std::map<int, std::map<std::uint64_t, std::vector<CurvePoint>>> curves;
    std::map<int, long> instances_per_budget;
    std::map<int, long> queries_per_budget;  // acquisition points, excluding pretrain
};

/// fixed_total: instances = floor(total_points / B) per budget;
/// fixed_instances: every budget runs the configured iteration schedule.
SweepResult run_budget_sweep(const FullConfig& cfg, const Corpus& corpus,
                             const std::string& out_root);

struct PretrainOutcome {
    ImitationReport report;
    std::string agent_path;
};

/// Oracle demonstrations on the pretraining instances, imitation training,
/// checkpoint + report.json under out_dir.
PretrainOutcome pretrain_agent(const FullConfig& cfg, const Corpus& corpus, std::uint64_t seed,
                               const std::string& out_dir);

// ---------------------------------------------------------------------------
// File-system level flows behind the CLI / C API
// ---------------------------------------------------------------------------

std::string corpus_path(const std::string& data_dir, ProblemKind kind);

void flow_gen_data(const FullConfig& cfg, const std::string& out_dir, bool force);
void flow_pretrain(const FullConfig& cfg, const std::string& data_dir,
                   const std::string& out_dir, bool force);
void flow_run(const FullConfig& cfg, const std::string& data_dir, const std::string& out_dir,
              bool force);
void flow_sweep(const FullConfig& cfg, const std::string& data_dir, const std::string& out_dir,
                bool force);

struct SolverValidation {
    double mae_mean = 0.0;
    double mae_std = 0.0;
    double rmse = 0.0;
    int instances = 0;
};

/// Nonuniform solves on oracle-policy subsets against the dense oracle
/// restricted to the same nodes (Burgers only).
SolverValidation flow_validate_solver(const FullConfig& cfg, int instances,
                                      const std::string& out_csv);

}  // namespace rlmesh
