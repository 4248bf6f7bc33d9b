#pragma once

#include "acquisition.hpp"
#include "core.hpp"
#include "reward.hpp"
#include "solvers.hpp"
#include "surrogate.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rlmesh {

enum class Method {
    rlmesh,
    uniform,
    random,
    gradient,
    variance,
    intensity,
    oracle,
    full_information,
};

const char* method_name(Method m);
Method method_from_name(const std::string& name);
std::vector<Method> all_methods();

enum class SolverMode { oracle_uniform, nonuniform };
enum class RewardMode { per_episode, per_batch };

struct RunConfig {
    Method method = Method::rlmesh;
    int iterations = 18;
    int instances_per_iteration = 50;
    int budget = 60;
    int retrain_interval = 1;
    int pretrain_instances = 100;
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
    SolverMode solver_mode = SolverMode::oracle_uniform;
    RewardMode reward_mode = RewardMode::per_episode;
    int train_instances = 1000;
    int test_instances = 200;
    int proxy_holdout = 50;
    std::uint64_t master_seed = 12345;
    int stop_after_iteration = 0;   // 0 = run to completion (partial-run/ops hook)
    int total_instances = 0;        // 0 = iterations * instances_per_iteration

    void validate() const;
    int effective_total_instances() const {
        return total_instances > 0 ? total_instances : iterations * instances_per_iteration;
    }
    int effective_iterations() const {
        int total = effective_total_instances();
        return (total + instances_per_iteration - 1) / instances_per_iteration;
    }
};

struct SurrogateConfig {
    std::string kind = "kernel_ridge";  // kernel_ridge | fourier_ridge
    RidgeConfig ridge;                  // lambda 0.1, gamma 1.0
    FourierRidgeConfig fourier;
    double input_scale = 0.0;           // 0 = per-problem default

    void validate() const;
};

struct SolverConfig {
    FluxConfig flux;
    AugmentationPolicy augmentation;
    IntegratorConfig integrator;

    void validate() const;
};

struct SweepConfig {
    std::vector<int> budgets = {20, 40, 60, 80, 100};
    long total_points = 10000;
    std::string mode = "fixed_total";  // fixed_total | fixed_instances

    void validate() const;
};

struct FullConfig {
    ProblemSpec problem;
    RunConfig run;
    AgentConfig agent;
    RewardConfig reward;
    RidgeConfig proxy;
    SurrogateConfig surrogate;
    SolverConfig solver;
    SweepConfig sweep;

    void validate() const;
    EncodingConfig encoding() const;
};

FullConfig default_config(ProblemKind kind);

/// Strict parse: unknown keys are rejected naming the full key path.
FullConfig config_from_json_text(const std::string& text);
FullConfig load_config(const std::string& path);
std::string config_to_json_text(const FullConfig& cfg);
void save_config(const FullConfig& cfg, const std::string& path);

/// desk: K=10, 20 instances/iteration, 3 seeds, reduced corpus.
/// paper: K=18, 50 instances/iteration, 5 seeds, full corpus.
void apply_preset(FullConfig& cfg, const std::string& preset);

/// SHA-256 of the canonical JSON form (checkpoint/manifest compatibility key).
std::string config_hash(const FullConfig& cfg);

}  // namespace rlmesh
