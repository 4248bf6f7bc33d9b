#include "harness.hpp"

#include "acquisition.hpp"
#include "binio.hpp"
#include "reward.hpp"
#include "sha256.hpp"
#include "solvers.hpp"
#include "surrogate.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace rlmesh {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kStreamSchedule = 51;
constexpr std::uint64_t kStreamBaseline = 52;

struct RewardRow {
    int iteration = 0;
    int episode = 0;
    double eps_old = 0, eps_new = 0, raw = 0, scaled = 0;
};

struct SelectionRow {
    int iteration = 0;
    std::uint64_t instance = 0;
    std::vector<int> indices;
};

struct TrainingRow {
    long update = 0;
    double loss = 0;
    double epsilon = 0;
    std::uint64_t buffer_size = 0;
};

struct SeedRunState {
    int done_iterations = 0;
    double cum_seconds = 0.0;
    long solver_queries = 0;
    double pretrain_rmse = 0.0;
    Dataset dataset;
    rng::Stream baseline;
    std::vector<CurvePoint> curve;
    std::vector<RewardRow> rewards;
    std::vector<SelectionRow> selections;
    std::vector<TrainingRow> training;
    DqnAgent agent;
    ReplayBuffer buffer{1};
    bool has_agent = false;
};

void ensure_dir(const std::string& path) { fs::create_directories(path); }

// ---- CSV writers (full rewrite per iteration keeps resume byte-identical) --

void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& rows) {
    std::ofstream os(path, std::ios::trunc);
    os << "iteration,cumulative_samples,rmse,solver_seconds_cum,seed\n";
    for (const auto& r : rows)
        os << r.iteration << "," << r.cumulative_samples << "," << format_double(r.rmse) << ","
           << format_double(r.solver_seconds_cum) << "," << r.seed << "\n";
}

void write_rewards_csv(const std::string& path, const std::vector<RewardRow>& rows) {
    std::ofstream os(path, std::ios::trunc);
    os << "iteration,episode,eps_old,eps_new,raw,scaled\n";
    for (const auto& r : rows)
        os << r.iteration << "," << r.episode << "," << format_double(r.eps_old) << ","
           << format_double(r.eps_new) << "," << format_double(r.raw) << ","
           << format_double(r.scaled) << "\n";
}

void write_selections_csv(const std::string& path, const std::vector<SelectionRow>& rows) {
    std::ofstream os(path, std::ios::trunc);
    os << "iteration,instance_id,indices\n";
    for (const auto& r : rows) {
        os << r.iteration << "," << r.instance << ",\"";
        for (std::size_t i = 0; i < r.indices.size(); ++i) {
            if (i) os << " ";
            os << r.indices[i];
        }
        os << "\"\n";
    }
}

void write_training_csv(const std::string& path, const std::vector<TrainingRow>& rows) {
    std::ofstream os(path, std::ios::trunc);
    os << "update,loss,epsilon,buffer_size\n";
    for (const auto& r : rows)
        os << r.update << "," << format_double(r.loss) << "," << format_double(r.epsilon) << ","
           << r.buffer_size << "\n";
}

// ---- checkpoint ------------------------------------------------------------

constexpr char kCkptMagic[4] = {'R', 'L', 'M', 'K'};
constexpr std::uint32_t kCkptVersion = 1;

void put_env_state(std::ostream& os, const EnvState& s) {
    binio::put_f64_vec(os, s.mask);
    binio::put_f64_vec(os, s.encoded);
    binio::put_u32(os, static_cast<std::uint32_t>(s.step));
}

EnvState get_env_state(std::istream& is) {
    EnvState s;
    s.mask = binio::get_f64_vec(is);
    s.encoded = binio::get_f64_vec(is);
    s.step = static_cast<int>(binio::get_u32(is));
    return s;
}

void save_checkpoint(const std::string& run_dir, const FullConfig& cfg, std::uint64_t seed,
                     const SeedRunState& st) {
    std::string tmp = run_dir + "/checkpoint.tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot write checkpoint in " + run_dir);
        os.write(kCkptMagic, 4);
        binio::put_u32(os, kCkptVersion);
        binio::put_string(os, config_hash(cfg));
        binio::put_u64(os, seed);
        binio::put_u32(os, static_cast<std::uint32_t>(st.done_iterations));
        binio::put_f64(os, st.cum_seconds);
        binio::put_u64(os, static_cast<std::uint64_t>(st.solver_queries));
        binio::put_f64(os, st.pretrain_rmse);

        binio::put_u64(os, st.dataset.samples.size());
        for (std::size_t i = 0; i < st.dataset.samples.size(); ++i) {
            const auto& s = st.dataset.samples[i];
            binio::put_u64(os, st.dataset.provenance[i].seed);
            binio::put_u32(os, st.dataset.provenance[i].iteration);
            binio::put_f64_vec(os, s.input.values);
            binio::put_u32(os, static_cast<std::uint32_t>(s.mask.budget));
            binio::put_i32_vec(os, s.mask.indices);
            binio::put_f64_vec(os, s.observed);
        }

        binio::put_u64(os, st.baseline.key());
        binio::put_u64(os, st.baseline.counter());

        binio::put_u64(os, st.curve.size());
        for (const auto& r : st.curve) {
            binio::put_u32(os, static_cast<std::uint32_t>(r.iteration));
            binio::put_u64(os, static_cast<std::uint64_t>(r.cumulative_samples));
            binio::put_f64(os, r.rmse);
            binio::put_f64(os, r.solver_seconds_cum);
            binio::put_u64(os, r.seed);
        }
        binio::put_u64(os, st.rewards.size());
        for (const auto& r : st.rewards) {
            binio::put_u32(os, static_cast<std::uint32_t>(r.iteration));
            binio::put_u32(os, static_cast<std::uint32_t>(r.episode));
            binio::put_f64(os, r.eps_old);
            binio::put_f64(os, r.eps_new);
            binio::put_f64(os, r.raw);
            binio::put_f64(os, r.scaled);
        }
        binio::put_u64(os, st.selections.size());
        for (const auto& r : st.selections) {
            binio::put_u32(os, static_cast<std::uint32_t>(r.iteration));
            binio::put_u64(os, r.instance);
            binio::put_i32_vec(os, r.indices);
        }
        binio::put_u64(os, st.training.size());
        for (const auto& r : st.training) {
            binio::put_u64(os, static_cast<std::uint64_t>(r.update));
            binio::put_f64(os, r.loss);
            binio::put_f64(os, r.epsilon);
            binio::put_u64(os, r.buffer_size);
        }

        os.put(st.has_agent ? 1 : 0);
        if (st.has_agent) {
            binio::put_u64(os, st.buffer.size());
            for (std::size_t i = 0; i < st.buffer.size(); ++i) {
                const Transition& t = st.buffer.at(i);
                put_env_state(os, t.state);
                binio::put_u32(os, static_cast<std::uint32_t>(t.action));
                binio::put_f64(os, t.reward);
                put_env_state(os, t.next);
                os.put(t.terminal ? 1 : 0);
            }
        }
        if (!os) throw std::runtime_error("checkpoint write failed in " + run_dir);
    }
    if (st.has_agent) st.agent.save(run_dir + "/agent_state.bin");
    fs::rename(tmp, run_dir + "/checkpoint.bin");
}

bool load_checkpoint(const std::string& run_dir, const FullConfig& cfg, std::uint64_t seed,
                     SeedRunState& st) {
    std::string path = run_dir + "/checkpoint.bin";
    std::ifstream is(path, std::ios::binary);
    if (!is) return false;
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kCkptMagic, 4) != 0)
        throw std::runtime_error("corrupt checkpoint in " + run_dir);
    if (binio::get_u32(is) != kCkptVersion)
        throw std::runtime_error("unsupported checkpoint version in " + run_dir);
    if (binio::get_string(is) != config_hash(cfg))
        throw std::runtime_error("checkpoint in " + run_dir +
                                 " was produced by a different config; pass --force");
    if (binio::get_u64(is) != seed)
        throw std::runtime_error("checkpoint seed mismatch in " + run_dir);
    st.done_iterations = static_cast<int>(binio::get_u32(is));
    st.cum_seconds = binio::get_f64(is);
    st.solver_queries = static_cast<long>(binio::get_u64(is));
    st.pretrain_rmse = binio::get_f64(is);

    std::uint64_t nsamples = binio::get_u64(is);
    st.dataset.kind = cfg.problem.kind;
    st.dataset.grid_size = static_cast<std::uint32_t>(cfg.problem.dense_size());
    st.dataset.samples.clear();
    st.dataset.provenance.clear();
    for (std::uint64_t i = 0; i < nsamples; ++i) {
        Provenance p;
        p.seed = binio::get_u64(is);
        p.iteration = binio::get_u32(is);
        LabeledSample s;
        s.input.values = binio::get_f64_vec(is);
        s.mask.budget = static_cast<int>(binio::get_u32(is));
        s.mask.indices = binio::get_i32_vec(is);
        s.observed = binio::get_f64_vec(is);
        st.dataset.append(std::move(s), p);
    }

    std::uint64_t bk = binio::get_u64(is), bc = binio::get_u64(is);
    st.baseline = rng::Stream(bk);
    st.baseline.set_counter(bc);

    st.curve.resize(binio::get_u64(is));
    for (auto& r : st.curve) {
        r.iteration = static_cast<int>(binio::get_u32(is));
        r.cumulative_samples = static_cast<long>(binio::get_u64(is));
        r.rmse = binio::get_f64(is);
        r.solver_seconds_cum = binio::get_f64(is);
        r.seed = binio::get_u64(is);
    }
    st.rewards.resize(binio::get_u64(is));
    for (auto& r : st.rewards) {
        r.iteration = static_cast<int>(binio::get_u32(is));
        r.episode = static_cast<int>(binio::get_u32(is));
        r.eps_old = binio::get_f64(is);
        r.eps_new = binio::get_f64(is);
        r.raw = binio::get_f64(is);
        r.scaled = binio::get_f64(is);
    }
    st.selections.resize(binio::get_u64(is));
    for (auto& r : st.selections) {
        r.iteration = static_cast<int>(binio::get_u32(is));
        r.instance = binio::get_u64(is);
        r.indices = binio::get_i32_vec(is);
    }
    st.training.resize(binio::get_u64(is));
    for (auto& r : st.training) {
        r.update = static_cast<long>(binio::get_u64(is));
        r.loss = binio::get_f64(is);
        r.epsilon = binio::get_f64(is);
        r.buffer_size = binio::get_u64(is);
    }

    st.has_agent = is.get() == 1;
    if (st.has_agent) {
        st.buffer = ReplayBuffer(static_cast<std::size_t>(cfg.agent.replay_capacity));
        std::uint64_t count = binio::get_u64(is);
        for (std::uint64_t i = 0; i < count; ++i) {
            Transition t;
            t.state = get_env_state(is);
            t.action = static_cast<int>(binio::get_u32(is));
            t.reward = binio::get_f64(is);
            t.next = get_env_state(is);
            t.terminal = is.get() == 1;
            st.buffer.push(std::move(t));
        }
        st.agent = DqnAgent::load(run_dir + "/agent_state.bin", cfg.problem, cfg.agent);
    }
    if (!is) throw std::runtime_error("truncated checkpoint in " + run_dir);
    return true;
}

// ---- acquisition plumbing ---------------------------------------------------

SelectionMask actions_to_dense(const SelectionMask& actions, const ProblemSpec& spec) {
    SelectionMask dense;
    dense.budget = actions.budget;
    dense.indices.reserve(actions.indices.size());
    for (int a : actions.indices) dense.indices.push_back(action_to_dense_index(a, spec));
    return dense;
}

std::vector<double> observe_instance(const FullConfig& cfg, const Instance& inst,
                                     const SelectionMask& dense_mask, double& seconds) {
    if (cfg.run.solver_mode == SolverMode::oracle_uniform)
        return restrict_field(inst.dense_solution, dense_mask);

    SolveStats stats;
    std::vector<double> out;
    switch (cfg.problem.kind) {
        case ProblemKind::burgers: {
            std::vector<int> sorted = dense_mask.indices;
            std::sort(sorted.begin(), sorted.end());
            const int n = cfg.problem.burgers.grid_n;
            SpatialGrid dense_grid = SpatialGrid::uniform(n);
            std::vector<double> coords;
            Field ic;
            coords.reserve(sorted.size());
            for (int idx : sorted) {
                coords.push_back(dense_grid.coords[static_cast<std::size_t>(idx)]);
                ic.values.push_back(inst.input.values[static_cast<std::size_t>(idx)]);
            }
            SpatialGrid nodes = SpatialGrid::from_coords(coords, dense_grid.nominal_spacing);
            Field sol = burgers_solve_nonuniform(ic, nodes, cfg.problem, cfg.solver.flux,
                                                 cfg.solver.augmentation, cfg.solver.integrator,
                                                 /*restrict_output=*/true, &stats);
            out.reserve(dense_mask.indices.size());
            for (int idx : dense_mask.indices) {
                auto it = std::lower_bound(sorted.begin(), sorted.end(), idx);
                out.push_back(sol.values[static_cast<std::size_t>(it - sorted.begin())]);
            }
            break;
        }
        case ProblemKind::darcy: {
            Field sol = darcy_solve(inst.input, cfg.problem, &stats);
            out = restrict_field(sol, dense_mask);
            break;
        }
        case ProblemKind::lorenz96: {
            Field sol;
            sol.values = lorenz96_solve(inst.input.values, cfg.problem, &stats);
            out = restrict_field(sol, dense_mask);
            break;
        }
    }
    seconds += stats.seconds;
    return out;
}

std::unique_ptr<SurrogateModel> fit_surrogate_model(const FullConfig& cfg, const Dataset& ds) {
    std::vector<std::vector<double>> xs, ys;
    dataset_to_training(ds, cfg.problem, cfg.encoding(), xs, ys);
    if (cfg.surrogate.kind == "fourier_ridge")
        return std::make_unique<FourierFeatureRidge>(
            FourierFeatureRidge::fit(xs, ys, cfg.surrogate.fourier));
    return std::make_unique<KernelRidgeModel>(
        KernelRidgeModel::fit(xs, ys, cfg.surrogate.ridge));
}

KernelRidgeModel fit_proxy_model(const FullConfig& cfg, const Dataset& ds) {
    std::vector<std::vector<double>> xs, ys;
    dataset_to_training(ds, cfg.problem, cfg.encoding(), xs, ys);
    return KernelRidgeModel::fit(xs, ys, cfg.proxy);
}

struct EpisodeOut {
    SelectionMask actions;
    std::vector<Transition> transitions;
};

EpisodeOut roll_episode(DqnAgent& agent, const Field& input, int budget,
                        const ProblemSpec& spec) {
    EnvState state = env_reset(input, spec);
    EpisodeOut out;
    out.actions.budget = budget;
    for (int t = 0; t < budget; ++t) {
        int a = agent.select_action_scheduled(state);
        auto [next, done] = env_step(state, a, budget);
        out.actions.indices.push_back(a);
        out.transitions.push_back({state, a, 0.0, next, done});
        state = std::move(next);
    }
    return out;
}

void write_manifest(const std::string& run_dir, const FullConfig& cfg, std::uint64_t seed,
                    const SeedRunState& st, bool completed) {
    json j;
    j["method"] = method_name(cfg.run.method);
    j["seed"] = seed;
    j["config_hash"] = config_hash(cfg);
    j["config"] = json::parse(config_to_json_text(cfg));
    j["pretrain_rmse"] = st.pretrain_rmse;
    j["solver_queries"] = st.solver_queries;
    j["completed"] = completed;
    j["iterations_done"] = st.done_iterations;
    std::ofstream os(run_dir + "/manifest.json", std::ios::trunc);
    os << j.dump(2) << "\n";
}

void flush_outputs(const std::string& run_dir, const FullConfig& cfg, std::uint64_t seed,
                   const SeedRunState& st, bool completed) {
    write_curve_csv(run_dir + "/curve.csv", st.curve);
    if (cfg.run.method == Method::rlmesh) {
        write_rewards_csv(run_dir + "/rewards.csv", st.rewards);
        write_training_csv(run_dir + "/training.csv", st.training);
    }
    write_selections_csv(run_dir + "/selections.csv", st.selections);
    write_manifest(run_dir, cfg, seed, st, completed);
}

}  // namespace

std::vector<int> proxy_holdout_indices(const RunConfig& run) {
    int pool_end = run.pretrain_instances + run.effective_total_instances();
    int holdout = run.proxy_holdout;
    std::vector<int> out;
    if (run.train_instances - pool_end >= holdout) {
        for (int i = run.train_instances - holdout; i < run.train_instances; ++i)
            out.push_back(i);
    } else {
        int count = std::min(holdout, run.pretrain_instances);
        for (int i = run.pretrain_instances - count; i < run.pretrain_instances; ++i)
            out.push_back(i);
    }
    return out;
}

RunResult run_active_learning_seed(const FullConfig& cfg, const Corpus& corpus,
                                   std::uint64_t seed, const std::string& run_dir,
                                   const std::string& agent_checkpoint) {
    cfg.validate();
    if (static_cast<int>(corpus.train.size()) < cfg.run.train_instances ||
        static_cast<int>(corpus.test.size()) < cfg.run.test_instances)
        throw std::runtime_error("corpus smaller than the configured instance counts");
    ensure_dir(run_dir);

    const ProblemSpec& spec = cfg.problem;
    const RunConfig& run = cfg.run;
    const int n_actions = spec.action_count();
    const int dense = spec.dense_size();
    const int total_instances = run.effective_total_instances();
    const int iterations = run.effective_iterations();
    const EncodingConfig enc = cfg.encoding();

    SeedRunState st;
    bool resumed = load_checkpoint(run_dir, cfg, seed, st);
    if (!resumed) {
        st.dataset.kind = spec.kind;
        st.dataset.grid_size = static_cast<std::uint32_t>(dense);
        st.baseline = rng::Stream(seed, kStreamBaseline);

        // Pretraining observations at the chosen fidelity (uniform masks).
        for (int i = 0; i < run.pretrain_instances; ++i) {
            const Instance& inst = corpus.train[static_cast<std::size_t>(i)];
            SelectionMask dense_mask =
                actions_to_dense(select_uniform(n_actions, run.budget), spec);
            LabeledSample sample;
            sample.input = inst.input;
            sample.mask = dense_mask;
            sample.observed = observe_instance(cfg, inst, dense_mask, st.cum_seconds);
            st.solver_queries += dense_mask.size();
            st.dataset.append(std::move(sample), {seed, 0});
        }

        if (run.method == Method::rlmesh) {
            if (agent_checkpoint.empty() || !fs::exists(agent_checkpoint))
                throw std::runtime_error(
                    "method rlmesh needs a pretrained agent checkpoint (run pretrain first): " +
                    agent_checkpoint);
            st.agent = DqnAgent::load(agent_checkpoint, spec, cfg.agent);
            st.buffer = ReplayBuffer(static_cast<std::size_t>(cfg.agent.replay_capacity));
            st.has_agent = true;
        }

        auto surrogate0 = fit_surrogate_model(cfg, st.dataset);
        std::vector<Instance> test(corpus.test.begin(),
                                   corpus.test.begin() + run.test_instances);
        st.pretrain_rmse = evaluate_model(*surrogate0, test, spec, enc);
        save_checkpoint(run_dir, cfg, seed, st);
        flush_outputs(run_dir, cfg, seed, st, false);
    }

    // Deterministic per-seed acquisition schedule over the pool.
    std::vector<int> pool(static_cast<std::size_t>(total_instances));
    std::iota(pool.begin(), pool.end(), run.pretrain_instances);
    {
        rng::Stream schedule(seed, kStreamSchedule);
        rng::shuffle(pool, schedule);
    }

    std::vector<Instance> test(corpus.test.begin(), corpus.test.begin() + run.test_instances);
    std::vector<Instance> heldout;
    for (int idx : proxy_holdout_indices(run))
        heldout.push_back(corpus.train[static_cast<std::size_t>(idx)]);

    std::unique_ptr<SurrogateModel> surrogate;
    if (st.done_iterations > 0 || run.retrain_interval > 1)
        surrogate = fit_surrogate_model(cfg, st.dataset);  // state after the last iteration

    RunResult result;
    result.pretrain_rmse = st.pretrain_rmse;

    for (int k = st.done_iterations + 1; k <= iterations; ++k) {
        int batch_begin = (k - 1) * run.instances_per_iteration;
        int batch_size = std::min(run.instances_per_iteration, total_instances - batch_begin);
        if (batch_size <= 0) break;

        Dataset before_ds, after_ds;
        KernelRidgeModel before_proxy;
        double eps_old = 0.0;
        if (run.method == Method::rlmesh) {
            before_ds = st.dataset;  // D^{(k-1)} snapshot, proxy cached for the iteration
            after_ds = before_ds;
            before_proxy = fit_proxy_model(cfg, before_ds);
            eps_old = evaluate_model(before_proxy, heldout, spec, enc);
        }
        std::vector<std::vector<Transition>> pending_episodes;

        for (int e = 0; e < batch_size; ++e) {
            const Instance& inst =
                corpus.train[static_cast<std::size_t>(pool[static_cast<std::size_t>(
                    batch_begin + e)])];

            SelectionMask dense_mask;
            EpisodeOut episode;
            switch (run.method) {
                case Method::rlmesh:
                    episode = roll_episode(st.agent, inst.input, run.budget, spec);
                    dense_mask = actions_to_dense(episode.actions, spec);
                    break;
                case Method::uniform:
                    dense_mask = actions_to_dense(select_uniform(n_actions, run.budget), spec);
                    break;
                case Method::random:
                    dense_mask = actions_to_dense(
                        select_random(n_actions, run.budget, st.baseline), spec);
                    break;
                case Method::gradient:
                    dense_mask = actions_to_dense(
                        select_gradient(inst.input, run.budget, spec), spec);
                    break;
                case Method::variance:
                    dense_mask = actions_to_dense(
                        select_variance(inst.input, run.budget, spec, cfg.proxy), spec);
                    break;
                case Method::intensity:
                    dense_mask = actions_to_dense(
                        select_intensity(inst.input, run.budget, spec), spec);
                    break;
                case Method::oracle:
                    dense_mask = actions_to_dense(oracle_policy(inst.input, run.budget, spec),
                                                  spec);
                    break;
                case Method::full_information: {
                    dense_mask.budget = dense;
                    dense_mask.indices.resize(static_cast<std::size_t>(dense));
                    std::iota(dense_mask.indices.begin(), dense_mask.indices.end(), 0);
                    break;
                }
            }

            LabeledSample sample;
            sample.input = inst.input;
            sample.mask = dense_mask;
            sample.observed = observe_instance(cfg, inst, dense_mask, st.cum_seconds);
            st.solver_queries += dense_mask.size();
            st.dataset.append(sample, {seed, static_cast<std::uint32_t>(k)});
            st.selections.push_back({k, inst.id, dense_mask.indices});

            if (run.method == Method::rlmesh && run.reward_mode == RewardMode::per_episode) {
                after_ds.append(sample, {seed, static_cast<std::uint32_t>(k)});
                EpisodeReward er = episode_reward(before_ds, after_ds, heldout, spec,
                                                  cfg.proxy, enc, cfg.reward, &before_proxy,
                                                  &eps_old);
                after_ds.samples.pop_back();
                after_ds.provenance.pop_back();
                st.rewards.push_back({k, e, er.eps_old, er.eps_new, er.raw, er.scaled});

                auto& ts = episode.transitions;
                if (cfg.agent.backup == AgentConfig::Backup::monte_carlo) {
                    for (std::size_t t = 0; t < ts.size(); ++t) {
                        ts[t].reward = er.scaled * std::pow(cfg.agent.discount,
                                                            double(ts.size() - 1 - t));
                        ts[t].terminal = true;
                    }
                } else {
                    ts.back().reward = er.scaled;
                }
                for (auto& t : ts) st.buffer.push(std::move(t));
            } else if (run.method == Method::rlmesh) {
                pending_episodes.push_back(std::move(episode.transitions));
            }
        }

        if (run.method == Method::rlmesh && run.reward_mode == RewardMode::per_batch) {
            EpisodeReward er = episode_reward(before_ds, st.dataset, heldout, spec, cfg.proxy,
                                              enc, cfg.reward, &before_proxy, &eps_old);
            for (std::size_t e = 0; e < pending_episodes.size(); ++e) {
                st.rewards.push_back({k, static_cast<int>(e), er.eps_old, er.eps_new, er.raw,
                                      er.scaled});
                auto& ts = pending_episodes[e];
                if (cfg.agent.backup == AgentConfig::Backup::monte_carlo) {
                    for (std::size_t t = 0; t < ts.size(); ++t) {
                        ts[t].reward = er.scaled * std::pow(cfg.agent.discount,
                                                            double(ts.size() - 1 - t));
                        ts[t].terminal = true;
                    }
                } else {
                    ts.back().reward = er.scaled;
                }
                for (auto& t : ts) st.buffer.push(std::move(t));
            }
        }

        if (run.method == Method::rlmesh) {
            for (int u = 0; u < cfg.agent.updates_per_iteration; ++u) {
                auto loss = st.agent.train_step(st.buffer);
                if (!loss) break;  // buffer below one batch
                st.training.push_back({st.agent.updates(), *loss, st.agent.current_epsilon(),
                                       st.buffer.size()});
            }
        }

        if (k % run.retrain_interval == 0 || !surrogate)
            surrogate = fit_surrogate_model(cfg, st.dataset);
        double test_rmse = evaluate_model(*surrogate, test, spec, enc);

        st.curve.push_back({k, static_cast<long>(st.dataset.size()), test_rmse,
                            cfg.run.solver_mode == SolverMode::oracle_uniform ? 0.0
                                                                              : st.cum_seconds,
                            seed});
        st.done_iterations = k;
        save_checkpoint(run_dir, cfg, seed, st);
        bool completed = k == iterations;
        flush_outputs(run_dir, cfg, seed, st, completed);

        if (run.stop_after_iteration > 0 && k >= run.stop_after_iteration && k < iterations) {
            result.curve = st.curve;
            result.solver_queries = st.solver_queries;
            result.completed = false;
            return result;
        }
    }

    save_dataset(run_dir + "/dataset.bin", st.dataset);
    result.curve = st.curve;
    result.solver_queries = st.solver_queries;
    result.completed = true;
    return result;
}

std::map<std::uint64_t, RunResult> run_active_learning(const FullConfig& cfg,
                                                       const Corpus& corpus,
                                                       const std::string& method_dir,
                                                       const std::string& pretrain_dir) {
    std::map<std::uint64_t, RunResult> results;
    std::vector<RmseRow> rmse_rows;
    for (std::uint64_t seed : cfg.run.seeds) {
        std::string run_dir = method_dir + "/seed_" + std::to_string(seed);
        std::string agent_path;
        if (cfg.run.method == Method::rlmesh)
            agent_path = pretrain_dir + "/seed_" + std::to_string(seed) + "/agent.bin";
        RunResult r = run_active_learning_seed(cfg, corpus, seed, run_dir, agent_path);
        for (const auto& p : r.curve)
            rmse_rows.push_back({p.iteration, method_name(cfg.run.method), seed, p.rmse});
        results[seed] = std::move(r);
    }
    ensure_dir(method_dir);
    write_rmse_csv(method_dir + "/rmse.csv", rmse_rows);
    return results;
}

std::vector<AggRow> aggregate(
    const std::map<std::string, std::vector<std::vector<CurvePoint>>>& curves_by_method) {
    if (curves_by_method.empty()) throw std::invalid_argument("aggregate: no curves");
    std::size_t seeds = curves_by_method.begin()->second.size();
    if (seeds < 2) throw std::invalid_argument("aggregate needs at least 2 seeds");
    for (const auto& [method, curves] : curves_by_method)
        if (curves.size() != seeds)
            throw std::invalid_argument("aggregate: seed count mismatch for method " + method);

    std::vector<AggRow> rows;
    for (const auto& [method, curves] : curves_by_method) {
        std::size_t iters = curves.front().size();
        for (const auto& c : curves)
            iters = std::min(iters, c.size());
        for (std::size_t i = 0; i < iters; ++i) {
            double mean = 0.0;
            for (const auto& c : curves) mean += c[i].rmse;
            mean /= double(seeds);
            double var = 0.0;
            for (const auto& c : curves) {
                double d = c[i].rmse - mean;
                var += d * d;
            }
            var /= double(seeds - 1);
            rows.push_back({method, curves.front()[i].iteration, mean, std::sqrt(var)});
        }
    }
    return rows;
}

std::optional<int> iterations_to_threshold(const std::vector<CurvePoint>& curve, double tau) {
    if (!(tau > 0)) throw std::invalid_argument("iterations_to_threshold: tau must be > 0");
    for (const auto& p : curve)
        if (p.rmse <= tau) return p.iteration;
    return std::nullopt;
}

PretrainOutcome pretrain_agent(const FullConfig& cfg, const Corpus& corpus, std::uint64_t seed,
                               const std::string& out_dir) {
    cfg.validate();
    ensure_dir(out_dir);
    std::vector<Instance> demo_instances(
        corpus.train.begin(), corpus.train.begin() + cfg.run.pretrain_instances);
    auto demos = collect_demonstrations(demo_instances, cfg.run.budget, cfg.problem);
    DqnAgent agent(cfg.problem, cfg.agent, seed);
    ImitationReport report = imitation_pretrain(agent, demos);

    PretrainOutcome out;
    out.report = report;
    out.agent_path = out_dir + "/agent.bin";
    agent.save(out.agent_path);

    json j;
    j["train_agreement"] = report.train_agreement;
    j["holdout_agreement"] = report.holdout_agreement;
    j["final_loss"] = report.final_loss;
    j["epochs"] = report.epochs;
    j["demonstrations"] = demos.size();
    j["train_threshold"] = cfg.agent.pretrain_agreement_train;
    j["holdout_threshold"] = cfg.agent.pretrain_agreement_holdout;
    j["train_pass"] = report.train_agreement >= cfg.agent.pretrain_agreement_train;
    j["holdout_pass"] = report.holdout_agreement >= cfg.agent.pretrain_agreement_holdout;
    std::ofstream os(out_dir + "/report.json", std::ios::trunc);
    os << j.dump(2) << "\n";
    return out;
}

SweepResult run_budget_sweep(const FullConfig& cfg, const Corpus& corpus,
                             const std::string& out_root) {
    cfg.sweep.validate();
    SweepResult result;
    for (int budget : cfg.sweep.budgets) {
        FullConfig bcfg = cfg;
        bcfg.run.budget = budget;
        if (cfg.sweep.mode == "fixed_total")
            bcfg.run.total_instances = static_cast<int>(cfg.sweep.total_points / budget);
        bcfg.validate();

        std::string budget_dir = out_root + "/budget_" + std::to_string(budget);
        std::string pretrain_dir = budget_dir + "/pretrain";
        if (bcfg.run.method == Method::rlmesh) {
            for (std::uint64_t seed : bcfg.run.seeds) {
                std::string seed_dir = pretrain_dir + "/seed_" + std::to_string(seed);
                if (!fs::exists(seed_dir + "/agent.bin"))
                    pretrain_agent(bcfg, corpus, seed, seed_dir);
            }
        }
        std::string method_dir = budget_dir + "/" + method_name(bcfg.run.method);
        auto runs = run_active_learning(bcfg, corpus, method_dir, pretrain_dir);
        long queries = 0;
        for (auto& [seed, r] : runs) {
            result.curves[budget][seed] = r.curve;
            queries = r.solver_queries - long(bcfg.run.pretrain_instances) * bcfg.run.budget;
        }
        result.instances_per_budget[budget] = bcfg.run.effective_total_instances();
        result.queries_per_budget[budget] = queries;
    }

    std::ofstream os(out_root + "/sweep_summary.csv", std::ios::trunc);
    os << "budget,seed,instances,acquisition_queries,final_rmse\n";
    for (const auto& [budget, per_seed] : result.curves)
        for (const auto& [seed, curve] : per_seed)
            os << budget << "," << seed << "," << result.instances_per_budget.at(budget) << ","
               << result.queries_per_budget.at(budget) << ","
               << format_double(curve.empty() ? 0.0 : curve.back().rmse) << "\n";
    return result;
}

// ---------------------------------------------------------------------------
// Flows
// ---------------------------------------------------------------------------

std::string corpus_path(const std::string& data_dir, ProblemKind kind) {
    return data_dir + "/" + problem_kind_name(kind) + "_corpus.bin";
}

void flow_gen_data(const FullConfig& cfg, const std::string& out_dir, bool force) {
    cfg.validate();
    ensure_dir(out_dir);
    std::string path = corpus_path(out_dir, cfg.problem.kind);
    if (fs::exists(path) && !force)
        throw std::runtime_error("corpus already exists at " + path +
                                 "; pass --force to regenerate");
    Corpus corpus = build_corpus(cfg.problem, cfg.run.train_instances, cfg.run.test_instances,
                                 cfg.run.master_seed);
    save_corpus(path, corpus);
    write_corpus_manifest(out_dir + "/" + std::string(problem_kind_name(cfg.problem.kind)) +
                              "_manifest.json",
                          corpus, path);
}

namespace {

Corpus load_corpus_checked(const FullConfig& cfg, const std::string& data_dir) {
    std::string path = corpus_path(data_dir, cfg.problem.kind);
    if (!fs::exists(path))
        throw std::runtime_error("corpus not found at " + path +
                                 "; run gen-data first (same --config, --out " + data_dir + ")");
    return load_corpus(path);
}

}  // namespace

void flow_pretrain(const FullConfig& cfg, const std::string& data_dir,
                   const std::string& out_dir, bool force) {
    cfg.validate();
    Corpus corpus = load_corpus_checked(cfg, data_dir);
    std::string base = out_dir + "/" + problem_kind_name(cfg.problem.kind) + "/pretrain";
    for (std::uint64_t seed : cfg.run.seeds) {
        std::string seed_dir = base + "/seed_" + std::to_string(seed);
        if (fs::exists(seed_dir + "/agent.bin") && !force) continue;
        pretrain_agent(cfg, corpus, seed, seed_dir);
    }
}

void flow_run(const FullConfig& cfg, const std::string& data_dir, const std::string& out_dir,
              bool force) {
    cfg.validate();
    Corpus corpus = load_corpus_checked(cfg, data_dir);
    std::string problem_dir = out_dir + "/" + problem_kind_name(cfg.problem.kind);
    std::string method_dir = problem_dir + "/" + method_name(cfg.run.method);
    std::string pretrain_dir = problem_dir + "/pretrain";
    if (force && fs::exists(method_dir)) fs::remove_all(method_dir);
    run_active_learning(cfg, corpus, method_dir, pretrain_dir);
}

void flow_sweep(const FullConfig& cfg, const std::string& data_dir, const std::string& out_dir,
                bool force) {
    cfg.validate();
    Corpus corpus = load_corpus_checked(cfg, data_dir);
    std::string sweep_dir =
        out_dir + "/" + problem_kind_name(cfg.problem.kind) + "/sweep";
    if (force && fs::exists(sweep_dir)) fs::remove_all(sweep_dir);
    run_budget_sweep(cfg, corpus, sweep_dir);
}

SolverValidation flow_validate_solver(const FullConfig& cfg, int instances,
                                      const std::string& out_csv) {
    if (cfg.problem.kind != ProblemKind::burgers)
        throw std::invalid_argument("validate-solver supports the burgers problem only");
    cfg.problem.validate();

    const int n = cfg.problem.burgers.grid_n;
    SpatialGrid dense_grid = SpatialGrid::uniform(n);
    std::uint64_t master = rng::hash_combine(cfg.run.master_seed, 0x5AFEull);

    std::ofstream csv;
    if (!out_csv.empty()) {
        csv.open(out_csv, std::ios::trunc);
        csv << "instance,mae,solve_seconds,accepted_steps,rejected_steps\n";
    }

    SolverValidation out;
    out.instances = instances;
    std::vector<double> maes;
    double sqsum = 0.0;
    long sqcount = 0;
    for (int i = 0; i < instances; ++i) {
        Field input = sample_input(cfg.problem, master, static_cast<std::uint64_t>(i));
        Field dense = burgers_solve_uniform(input, cfg.problem, cfg.solver.flux,
                                            cfg.solver.integrator);
        SelectionMask mask = oracle_policy(input, cfg.run.budget, cfg.problem);
        std::vector<int> sorted = mask.indices;
        std::sort(sorted.begin(), sorted.end());

        std::vector<double> coords;
        Field ic;
        for (int idx : sorted) {
            coords.push_back(dense_grid.coords[static_cast<std::size_t>(idx)]);
            ic.values.push_back(input.values[static_cast<std::size_t>(idx)]);
        }
        SolveStats stats;
        Field sol = burgers_solve_nonuniform(
            ic, SpatialGrid::from_coords(coords, dense_grid.nominal_spacing), cfg.problem,
            cfg.solver.flux, cfg.solver.augmentation, cfg.solver.integrator, true, &stats);

        double mae = 0.0;
        for (std::size_t j = 0; j < sorted.size(); ++j) {
            double diff = sol.values[j] -
                          dense.values[static_cast<std::size_t>(sorted[j])];
            mae += std::abs(diff);
            sqsum += diff * diff;
            ++sqcount;
        }
        mae /= double(sorted.size());
        maes.push_back(mae);
        if (csv.is_open())
            csv << i << "," << format_double(mae) << "," << format_double(stats.seconds) << ","
                << stats.accepted_steps << "," << stats.rejected_steps << "\n";
    }
    double mean = std::accumulate(maes.begin(), maes.end(), 0.0) / double(maes.size());
    double var = 0.0;
    for (double m : maes) var += (m - mean) * (m - mean);
    out.mae_mean = mean;
    out.mae_std = std::sqrt(var / double(maes.size()));
    out.rmse = std::sqrt(sqsum / double(sqcount));
    return out;
}

}  // namespace rlmesh
