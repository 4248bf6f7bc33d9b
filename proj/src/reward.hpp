#pragma once

#include "core.hpp"
#include "generators.hpp"
#include "surrogate.hpp"

#include <vector>

namespace rlmesh {

struct RewardConfig {
    double kappa = 1e4;
};

/// -kappa * (eps_new - eps_old); positive iff the proxy improved.
double raw_reward(double eps_old, double eps_new, double kappa);

/// Piecewise map of the raw reward into [-1, 1]; odd, sgn(0) = 0, identity
/// exactly on 0.1 <= |x| < 1, and deliberately not monotone at |x| = 0.1.
double scale_reward(double raw);

/// Pearson correlation of average ranks. Throws on constant sequences.
double spearman(const std::vector<double>& xs, const std::vector<double>& ys);

struct EpisodeReward {
    double eps_old = 0.0;
    double eps_new = 0.0;
    double raw = 0.0;
    double scaled = 0.0;
};

/// Refits the proxy on dataset_after (and on dataset_before when no cached
/// model is supplied), measures held-out RMSE, applies raw_reward then
/// scale_reward. dataset_after must strictly extend dataset_before.
EpisodeReward episode_reward(const Dataset& dataset_before, const Dataset& dataset_after,
                             const std::vector<Instance>& heldout, const ProblemSpec& spec,
                             const RidgeConfig& proxy_cfg, const EncodingConfig& enc,
                             const RewardConfig& reward_cfg,
                             const KernelRidgeModel* cached_before = nullptr,
                             const double* cached_eps_old = nullptr);

}  // namespace rlmesh
