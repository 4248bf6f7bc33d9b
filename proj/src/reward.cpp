#include "reward.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rlmesh {

double raw_reward(double eps_old, double eps_new, double kappa) {
    if (eps_old < 0 || eps_new < 0)
        throw std::invalid_argument("raw_reward: rmse values must be nonnegative");
    return -kappa * (eps_new - eps_old);
}

double scale_reward(double raw) {
    if (!std::isfinite(raw)) throw std::invalid_argument("scale_reward: raw must be finite");
    double s = (raw > 0.0) - (raw < 0.0);
    double ax = std::abs(raw);
    if (ax < 0.01) return 0.8 * s;
    if (ax < 0.1) return (0.8 + 0.2 * ax / 0.1) * s;
    if (ax < 1.0) return raw;
    if (ax < 10.0) return (1.0 - 0.01 * (ax - 1.0) / 9.0) * s;
    return s * std::min(1.0, 0.99 + 0.01 * std::log(ax / 10.0));
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
        double avg = 0.5 * (double(i) + double(j)) + 1.0;  // 1-based average rank
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("spearman needs equal lengths >= 2");
    auto rx = average_ranks(xs);
    auto ry = average_ranks(ys);
    double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / double(rx.size());
    double my = std::accumulate(ry.begin(), ry.end(), 0.0) / double(ry.size());
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        double dx = rx[i] - mx, dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw std::invalid_argument("spearman undefined for constant sequences");
    return sxy / std::sqrt(sxx * syy);
}

EpisodeReward episode_reward(const Dataset& dataset_before, const Dataset& dataset_after,
                             const std::vector<Instance>& heldout, const ProblemSpec& spec,
                             const RidgeConfig& proxy_cfg, const EncodingConfig& enc,
                             const RewardConfig& reward_cfg,
                             const KernelRidgeModel* cached_before,
                             const double* cached_eps_old) {
    if (dataset_after.size() <= dataset_before.size())
        throw std::invalid_argument("episode_reward: dataset_after must extend dataset_before");

    EpisodeReward out;
    std::vector<std::vector<double>> xs, ys;
    if (cached_eps_old != nullptr) {
        out.eps_old = *cached_eps_old;
    } else if (cached_before != nullptr) {
        out.eps_old = evaluate_model(*cached_before, heldout, spec, enc);
    } else {
        dataset_to_training(dataset_before, spec, enc, xs, ys);
        auto before = KernelRidgeModel::fit(xs, ys, proxy_cfg);
        out.eps_old = evaluate_model(before, heldout, spec, enc);
    }
    dataset_to_training(dataset_after, spec, enc, xs, ys);
    auto after = KernelRidgeModel::fit(xs, ys, proxy_cfg);
    out.eps_new = evaluate_model(after, heldout, spec, enc);
    out.raw = raw_reward(out.eps_old, out.eps_new, reward_cfg.kappa);
    out.scaled = scale_reward(out.raw);
    return out;
}

}  // namespace rlmesh
