#include "config.hpp"

#include "sha256.hpp"

#include "json.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace rlmesh {

using nlohmann::json;

const char* method_name(Method m) {
    switch (m) {
        case Method::rlmesh: return "rlmesh";
        case Method::uniform: return "uniform";
        case Method::random: return "random";
        case Method::gradient: return "gradient";
        case Method::variance: return "variance";
        case Method::intensity: return "intensity";
        case Method::oracle: return "oracle";
        case Method::full_information: return "full_information";
    }
    return "unknown";
}

Method method_from_name(const std::string& name) {
    for (Method m : all_methods())
        if (name == method_name(m)) return m;
    throw std::invalid_argument("unknown method: " + name);
}

std::vector<Method> all_methods() {
    return {Method::rlmesh,   Method::uniform,   Method::random, Method::gradient,
            Method::variance, Method::intensity, Method::oracle, Method::full_information};
}

void RunConfig::validate() const {
    if (iterations < 1) throw std::invalid_argument("run.iterations must be >= 1");
    if (instances_per_iteration < 1)
        throw std::invalid_argument("run.instances_per_iteration must be >= 1");
    if (budget < 1) throw std::invalid_argument("run.budget must be >= 1");
    if (retrain_interval < 1) throw std::invalid_argument("run.retrain_interval must be >= 1");
    if (pretrain_instances < 1) throw std::invalid_argument("run.pretrain_instances must be >= 1");
    if (seeds.empty()) throw std::invalid_argument("run.seeds must not be empty");
    if (train_instances < 1) throw std::invalid_argument("run.train_instances must be >= 1");
    if (test_instances < 1) throw std::invalid_argument("run.test_instances must be >= 1");
    if (proxy_holdout < 1) throw std::invalid_argument("run.proxy_holdout must be >= 1");
    if (stop_after_iteration < 0)
        throw std::invalid_argument("run.stop_after_iteration must be >= 0");
    if (total_instances < 0) throw std::invalid_argument("run.total_instances must be >= 0");
    if (pretrain_instances + effective_total_instances() > train_instances)
        throw std::invalid_argument(
            "run: pretrain_instances + acquisition instances exceed train_instances");
}

void SurrogateConfig::validate() const {
    if (kind != "kernel_ridge" && kind != "fourier_ridge")
        throw std::invalid_argument("surrogate.kind must be kernel_ridge or fourier_ridge");
    if (!(ridge.lambda > 0)) throw std::invalid_argument("surrogate.lambda must be > 0");
    if (!(ridge.gamma > 0)) throw std::invalid_argument("surrogate.gamma must be > 0");
    if (fourier.feature_count < 1)
        throw std::invalid_argument("surrogate.fourier_features must be >= 1");
    if (!(fourier.lambda > 0)) throw std::invalid_argument("surrogate.fourier_lambda must be > 0");
    if (input_scale < 0) throw std::invalid_argument("surrogate.input_scale must be >= 0");
}

void SolverConfig::validate() const {
    if (flux.godunov_blend < 0 || flux.godunov_blend > 1)
        throw std::invalid_argument("solver.godunov_blend must lie in [0, 1]");
    if (!(augmentation.max_gap_ratio > 1))
        throw std::invalid_argument("solver.max_gap_ratio must be > 1");
    if (!(augmentation.max_adjacent_ratio > 1))
        throw std::invalid_argument("solver.max_adjacent_ratio must be > 1");
    if (!(integrator.rtol > 0) || !(integrator.atol > 0))
        throw std::invalid_argument("solver tolerances must be > 0");
}

void SweepConfig::validate() const {
    if (budgets.empty()) throw std::invalid_argument("sweep.budgets must not be empty");
    for (int b : budgets)
        if (b < 1) throw std::invalid_argument("sweep.budgets entries must be >= 1");
    if (total_points < 1) throw std::invalid_argument("sweep.total_points must be >= 1");
    if (mode != "fixed_total" && mode != "fixed_instances")
        throw std::invalid_argument("sweep.mode must be fixed_total or fixed_instances");
}

void FullConfig::validate() const {
    problem.validate();
    run.validate();
    agent.validate();
    if (!(reward.kappa > 0)) throw std::invalid_argument("reward.kappa must be > 0");
    if (!(proxy.lambda > 0)) throw std::invalid_argument("proxy.lambda must be > 0");
    if (!(proxy.gamma > 0)) throw std::invalid_argument("proxy.gamma must be > 0");
    surrogate.validate();
    solver.validate();
    sweep.validate();
    if (run.budget > problem.action_count())
        throw std::invalid_argument("run.budget exceeds the action count");
}

EncodingConfig FullConfig::encoding() const {
    EncodingConfig enc;
    enc.input_scale = surrogate.input_scale > 0 ? surrogate.input_scale
                                                : EncodingConfig::default_scale(problem.kind);
    return enc;
}

FullConfig default_config(ProblemKind kind) {
    FullConfig cfg;
    cfg.problem.kind = kind;
    if (kind == ProblemKind::lorenz96) cfg.run.budget = 15;
    if (kind == ProblemKind::darcy) cfg.agent.hidden_width = 256;
    return cfg;
}

void apply_preset(FullConfig& cfg, const std::string& preset) {
    if (preset == "desk") {
        cfg.run.iterations = 10;
        cfg.run.instances_per_iteration = 20;
        cfg.run.seeds = {0, 1, 2};
        cfg.run.train_instances = 700;
        cfg.run.test_instances = 200;
    } else if (preset == "paper") {
        cfg.run.iterations = 18;
        cfg.run.instances_per_iteration = 50;
        cfg.run.seeds = {0, 1, 2, 3, 4};
        cfg.run.train_instances = 1000;
        cfg.run.test_instances = 200;
    } else {
        throw std::invalid_argument("unknown preset: " + preset + " (expected desk or paper)");
    }
}

// ---------------------------------------------------------------------------
// JSON (strict)
// ---------------------------------------------------------------------------

namespace {

class StrictObject {
public:
    StrictObject(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object())
            throw std::invalid_argument("config: " + path_ + " must be an object");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    const json& at(const std::string& key) { return j_.at(key); }

    template <typename T>
    void read(const std::string& key, T& target) {
        if (!has(key)) return;
        try {
            j_.at(key).get_to(target);
        } catch (const json::exception&) {
            throw std::invalid_argument("config: bad value for " + path_ + "." + key);
        }
    }

    json section(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key) ? j_.at(key) : json::object();
    }

    void finish() const {
        for (const auto& item : j_.items()) {
            if (seen_.count(item.key()) == 0)
                throw std::invalid_argument("config: unknown key " + path_ + "." + item.key());
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace

FullConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
    }

    StrictObject root(j, "config");
    FullConfig cfg;

    {
        json pj = root.section("problem");
        StrictObject p(pj, "problem");
        std::string kind = "burgers";
        p.read("kind", kind);
        cfg = default_config(problem_kind_from_name(kind));
        {
            json bj = p.section("burgers");
            StrictObject b(bj, "problem.burgers");
            b.read("viscosity", cfg.problem.burgers.viscosity);
            b.read("horizon", cfg.problem.burgers.horizon);
            b.read("grid_n", cfg.problem.burgers.grid_n);
            if (b.has("boundary")) {
                std::string mode = bj.at("boundary").get<std::string>();
                if (mode == "dirichlet_walls")
                    cfg.problem.burgers.boundary = BoundaryMode::dirichlet_walls;
                else if (mode == "periodic")
                    cfg.problem.burgers.boundary = BoundaryMode::periodic;
                else
                    throw std::invalid_argument("config: bad value for problem.burgers.boundary");
            }
            b.finish();
        }
        {
            json dj = p.section("darcy");
            StrictObject d(dj, "problem.darcy");
            d.read("grid_n", cfg.problem.darcy.grid_n);
            d.read("forcing", cfg.problem.darcy.forcing);
            d.read("level_low", cfg.problem.darcy.level_low);
            d.read("level_high", cfg.problem.darcy.level_high);
            d.read("patch_n", cfg.problem.darcy.patch_n);
            d.finish();
        }
        {
            json lj = p.section("lorenz96");
            StrictObject l(lj, "problem.lorenz96");
            l.read("dim", cfg.problem.lorenz96.dim);
            l.read("forcing", cfg.problem.lorenz96.forcing);
            l.read("dt", cfg.problem.lorenz96.dt);
            l.read("horizon", cfg.problem.lorenz96.horizon);
            l.finish();
        }
        p.finish();
    }
    {
        json rj = root.section("run");
        StrictObject r(rj, "run");
        if (r.has("method")) cfg.run.method = method_from_name(rj.at("method").get<std::string>());
        r.read("iterations", cfg.run.iterations);
        r.read("instances_per_iteration", cfg.run.instances_per_iteration);
        r.read("budget", cfg.run.budget);
        r.read("retrain_interval", cfg.run.retrain_interval);
        r.read("pretrain_instances", cfg.run.pretrain_instances);
        r.read("seeds", cfg.run.seeds);
        if (r.has("solver_mode")) {
            std::string mode = rj.at("solver_mode").get<std::string>();
            if (mode == "oracle_uniform") cfg.run.solver_mode = SolverMode::oracle_uniform;
            else if (mode == "nonuniform") cfg.run.solver_mode = SolverMode::nonuniform;
            else throw std::invalid_argument("config: bad value for run.solver_mode");
        }
        if (r.has("reward_mode")) {
            std::string mode = rj.at("reward_mode").get<std::string>();
            if (mode == "per_episode") cfg.run.reward_mode = RewardMode::per_episode;
            else if (mode == "per_batch") cfg.run.reward_mode = RewardMode::per_batch;
            else throw std::invalid_argument("config: bad value for run.reward_mode");
        }
        r.read("train_instances", cfg.run.train_instances);
        r.read("test_instances", cfg.run.test_instances);
        r.read("proxy_holdout", cfg.run.proxy_holdout);
        r.read("master_seed", cfg.run.master_seed);
        r.read("stop_after_iteration", cfg.run.stop_after_iteration);
        r.read("total_instances", cfg.run.total_instances);
        r.finish();
    }
    {
        json aj = root.section("agent");
        StrictObject a(aj, "agent");
        a.read("learning_rate", cfg.agent.learning_rate);
        a.read("weight_decay", cfg.agent.weight_decay);
        a.read("discount", cfg.agent.discount);
        a.read("batch_size", cfg.agent.batch_size);
        a.read("epsilon_start", cfg.agent.epsilon_start);
        a.read("epsilon_floor", cfg.agent.epsilon_floor);
        a.read("epsilon_decay", cfg.agent.epsilon_decay);
        a.read("target_sync_interval", cfg.agent.target_sync_interval);
        a.read("gradient_clip", cfg.agent.gradient_clip);
        a.read("hidden_width", cfg.agent.hidden_width);
        a.read("replay_capacity", cfg.agent.replay_capacity);
        if (a.has("backup_mode")) {
            std::string mode = aj.at("backup_mode").get<std::string>();
            if (mode == "td") cfg.agent.backup = AgentConfig::Backup::td;
            else if (mode == "monte_carlo") cfg.agent.backup = AgentConfig::Backup::monte_carlo;
            else throw std::invalid_argument("config: bad value for agent.backup_mode");
        }
        a.read("updates_per_iteration", cfg.agent.updates_per_iteration);
        a.read("pretrain_epochs", cfg.agent.pretrain_epochs);
        a.read("pretrain_learning_rate", cfg.agent.pretrain_learning_rate);
        a.read("pretrain_batch", cfg.agent.pretrain_batch);
        a.read("pretrain_agreement_train", cfg.agent.pretrain_agreement_train);
        a.read("pretrain_agreement_holdout", cfg.agent.pretrain_agreement_holdout);
        a.finish();
    }
    {
        json wj = root.section("reward");
        StrictObject w(wj, "reward");
        w.read("kappa", cfg.reward.kappa);
        w.finish();
    }
    {
        json pj = root.section("proxy");
        StrictObject p(pj, "proxy");
        p.read("lambda", cfg.proxy.lambda);
        p.read("gamma", cfg.proxy.gamma);
        p.read("jitter", cfg.proxy.jitter);
        p.finish();
    }
    {
        json sj = root.section("surrogate");
        StrictObject s(sj, "surrogate");
        s.read("kind", cfg.surrogate.kind);
        s.read("lambda", cfg.surrogate.ridge.lambda);
        s.read("gamma", cfg.surrogate.ridge.gamma);
        s.read("jitter", cfg.surrogate.ridge.jitter);
        s.read("fourier_features", cfg.surrogate.fourier.feature_count);
        s.read("fourier_scale", cfg.surrogate.fourier.frequency_scale);
        s.read("fourier_lambda", cfg.surrogate.fourier.lambda);
        s.read("input_scale", cfg.surrogate.input_scale);
        s.finish();
    }
    {
        json sj = root.section("solver");
        StrictObject s(sj, "solver");
        s.read("godunov_blend", cfg.solver.flux.godunov_blend);
        s.read("max_gap_ratio", cfg.solver.augmentation.max_gap_ratio);
        s.read("max_adjacent_ratio", cfg.solver.augmentation.max_adjacent_ratio);
        s.read("anchor_walls", cfg.solver.augmentation.anchor_walls);
        s.read("rtol", cfg.solver.integrator.rtol);
        s.read("atol", cfg.solver.integrator.atol);
        s.read("cfl_coeff", cfg.solver.integrator.cfl_coeff);
        s.finish();
    }
    {
        json sj = root.section("sweep");
        StrictObject s(sj, "sweep");
        s.read("budgets", cfg.sweep.budgets);
        s.read("total_points", cfg.sweep.total_points);
        s.read("mode", cfg.sweep.mode);
        s.finish();
    }
    root.finish();
    cfg.validate();
    return cfg;
}

FullConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return config_from_json_text(text);
}

std::string config_to_json_text(const FullConfig& cfg) {
    json j;
    j["problem"]["kind"] = problem_kind_name(cfg.problem.kind);
    j["problem"]["burgers"] = {
        {"viscosity", cfg.problem.burgers.viscosity},
        {"horizon", cfg.problem.burgers.horizon},
        {"grid_n", cfg.problem.burgers.grid_n},
        {"boundary", cfg.problem.burgers.boundary == BoundaryMode::periodic
                         ? "periodic"
                         : "dirichlet_walls"},
    };
    j["problem"]["darcy"] = {
        {"grid_n", cfg.problem.darcy.grid_n},       {"forcing", cfg.problem.darcy.forcing},
        {"level_low", cfg.problem.darcy.level_low}, {"level_high", cfg.problem.darcy.level_high},
        {"patch_n", cfg.problem.darcy.patch_n},
    };
    j["problem"]["lorenz96"] = {
        {"dim", cfg.problem.lorenz96.dim},
        {"forcing", cfg.problem.lorenz96.forcing},
        {"dt", cfg.problem.lorenz96.dt},
        {"horizon", cfg.problem.lorenz96.horizon},
    };
    j["run"] = {
        {"method", method_name(cfg.run.method)},
        {"iterations", cfg.run.iterations},
        {"instances_per_iteration", cfg.run.instances_per_iteration},
        {"budget", cfg.run.budget},
        {"retrain_interval", cfg.run.retrain_interval},
        {"pretrain_instances", cfg.run.pretrain_instances},
        {"seeds", cfg.run.seeds},
        {"solver_mode",
         cfg.run.solver_mode == SolverMode::nonuniform ? "nonuniform" : "oracle_uniform"},
        {"reward_mode",
         cfg.run.reward_mode == RewardMode::per_batch ? "per_batch" : "per_episode"},
        {"train_instances", cfg.run.train_instances},
        {"test_instances", cfg.run.test_instances},
        {"proxy_holdout", cfg.run.proxy_holdout},
        {"master_seed", cfg.run.master_seed},
        {"stop_after_iteration", cfg.run.stop_after_iteration},
        {"total_instances", cfg.run.total_instances},
    };
    j["agent"] = {
        {"learning_rate", cfg.agent.learning_rate},
        {"weight_decay", cfg.agent.weight_decay},
        {"discount", cfg.agent.discount},
        {"batch_size", cfg.agent.batch_size},
        {"epsilon_start", cfg.agent.epsilon_start},
        {"epsilon_floor", cfg.agent.epsilon_floor},
        {"epsilon_decay", cfg.agent.epsilon_decay},
        {"target_sync_interval", cfg.agent.target_sync_interval},
        {"gradient_clip", cfg.agent.gradient_clip},
        {"hidden_width", cfg.agent.hidden_width},
        {"replay_capacity", cfg.agent.replay_capacity},
        {"backup_mode",
         cfg.agent.backup == AgentConfig::Backup::monte_carlo ? "monte_carlo" : "td"},
        {"updates_per_iteration", cfg.agent.updates_per_iteration},
        {"pretrain_epochs", cfg.agent.pretrain_epochs},
        {"pretrain_learning_rate", cfg.agent.pretrain_learning_rate},
        {"pretrain_batch", cfg.agent.pretrain_batch},
        {"pretrain_agreement_train", cfg.agent.pretrain_agreement_train},
        {"pretrain_agreement_holdout", cfg.agent.pretrain_agreement_holdout},
    };
    j["reward"] = {{"kappa", cfg.reward.kappa}};
    j["proxy"] = {{"lambda", cfg.proxy.lambda}, {"gamma", cfg.proxy.gamma},
                  {"jitter", cfg.proxy.jitter}};
    j["surrogate"] = {
        {"kind", cfg.surrogate.kind},
        {"lambda", cfg.surrogate.ridge.lambda},
        {"gamma", cfg.surrogate.ridge.gamma},
        {"jitter", cfg.surrogate.ridge.jitter},
        {"fourier_features", cfg.surrogate.fourier.feature_count},
        {"fourier_scale", cfg.surrogate.fourier.frequency_scale},
        {"fourier_lambda", cfg.surrogate.fourier.lambda},
        {"input_scale", cfg.surrogate.input_scale},
    };
    j["solver"] = {
        {"godunov_blend", cfg.solver.flux.godunov_blend},
        {"max_gap_ratio", cfg.solver.augmentation.max_gap_ratio},
        {"max_adjacent_ratio", cfg.solver.augmentation.max_adjacent_ratio},
        {"anchor_walls", cfg.solver.augmentation.anchor_walls},
        {"rtol", cfg.solver.integrator.rtol},
        {"atol", cfg.solver.integrator.atol},
        {"cfl_coeff", cfg.solver.integrator.cfl_coeff},
    };
    j["sweep"] = {
        {"budgets", cfg.sweep.budgets},
        {"total_points", cfg.sweep.total_points},
        {"mode", cfg.sweep.mode},
    };
    return j.dump(2) + "\n";
}

void save_config(const FullConfig& cfg, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write config file " + path);
    os << config_to_json_text(cfg);
}

std::string config_hash(const FullConfig& cfg) {
    FullConfig canon = cfg;
    canon.run.stop_after_iteration = 0;  // partial runs must resume under the same hash
    std::string text = config_to_json_text(canon);
    return sha256_hex(text.data(), text.size());
}

}  // namespace rlmesh
