#pragma once

#include "core.hpp"
#include "rng.hpp"
#include "surrogate.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rlmesh {

// ---------------------------------------------------------------------------
// Selection MDP
// ---------------------------------------------------------------------------

struct EnvState {
    std::vector<double> mask;     // 0/1 per action cell, selection so far
    std::vector<double> encoded;  // instance input min-max normalized to [0, 1]
    int step = 0;

    int actions() const { return static_cast<int>(mask.size()); }
};

/// Min-max normalization of the input over the action cells; constant inputs
/// fall back to the zero vector. Darcy inputs are read at patch centers.
std::vector<double> env_encode_input(const Field& input, const ProblemSpec& spec);

EnvState env_reset(const Field& input, const ProblemSpec& spec);

/// Marks the action cell; done when step reaches the budget. Re-selecting a
/// cell is an error (the agent must mask).
std::pair<EnvState, bool> env_step(const EnvState& state, int action, int budget);

/// Dense-grid index queried by an action (identity except Darcy, where an
/// action is a patch of the coarse grid and queries its center lattice point).
int action_to_dense_index(int action, const ProblemSpec& spec);

// ---------------------------------------------------------------------------
// Q-network: (2n + 1) -> hidden -> hidden -> n, ReLU + final tanh
// ---------------------------------------------------------------------------

class QNetwork {
public:
    QNetwork() = default;
    QNetwork(int n_actions, int hidden_width, std::uint64_t seed);

    /// Tanh-squashed action values in (-1, 1).
    Eigen::VectorXd values(const EnvState& state) const;
    /// Pre-tanh logits (same argmax as values).
    Eigen::VectorXd logits(const EnvState& state) const;

    int actions() const { return n_actions_; }
    int hidden() const { return hidden_; }
    int input_dim() const { return 2 * n_actions_ + 1; }

    static Eigen::VectorXd pack_state(const EnvState& state, int budget_hint);

    // Parameter access in a fixed order (W1,b1,W2,b2,W3,b3) for the
    // optimizer, target sync, and serialization.
    std::vector<Eigen::Map<Eigen::VectorXd>> param_views();
    std::vector<Eigen::Map<const Eigen::VectorXd>> param_views() const;

    Eigen::MatrixXd W1, W2, W3;
    Eigen::VectorXd b1, b2, b3;

private:
    int n_actions_ = 0;
    int hidden_ = 0;
};

struct QGrads {
    Eigen::MatrixXd W1, W2, W3;
    Eigen::VectorXd b1, b2, b3;
    void set_zero(const QNetwork& net);
    double squared_norm() const;
    void scale(double s);
};

/// Batched forward pass retaining activations for backprop.
struct QForward {
    Eigen::MatrixXd X, A1, A2, Z3, Out;
};
QForward q_forward(const QNetwork& net, const Eigen::MatrixXd& X);
/// Backpropagate dL/dZ3 (pre-tanh) into parameter gradients.
QGrads q_backward(const QNetwork& net, const QForward& fwd, const Eigen::MatrixXd& dZ3);

// ---------------------------------------------------------------------------
// Replay
// ---------------------------------------------------------------------------

struct Transition {
    EnvState state;
    int action = 0;
    double reward = 0.0;
    EnvState next;
    bool terminal = false;
};

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity = 10000);
    void push(Transition t);
    std::size_t size() const { return count_; }
    std::size_t capacity() const { return capacity_; }
    /// i = 0 is the oldest retained transition.
    const Transition& at(std::size_t i) const;

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::size_t count_ = 0;
    std::vector<Transition> data_;
};

// ---------------------------------------------------------------------------
// Agent
// ---------------------------------------------------------------------------

struct AgentConfig {
    double learning_rate = 1e-4;
    double weight_decay = 1e-4;
    double discount = 0.99;
    int batch_size = 64;
    double epsilon_start = 1.0;
    double epsilon_floor = 0.1;
    double epsilon_decay = 0.995;
    int target_sync_interval = 100;
    double gradient_clip = 1.0;
    int hidden_width = 256;
    int replay_capacity = 10000;
    enum class Backup { td, monte_carlo };
    Backup backup = Backup::td;
    int updates_per_iteration = 200;
    int pretrain_epochs = 50;
    double pretrain_learning_rate = 3e-3;
    int pretrain_batch = 128;
    double pretrain_agreement_train = 0.8;   // thresholds from the pilot run
    double pretrain_agreement_holdout = 0.6;

    void validate() const;
};

/// max(floor, start * decay^k) with the configured schedule.
double epsilon_at(long step, const AgentConfig& cfg = {});

struct AdamState {
    std::vector<Eigen::VectorXd> m, v;
    long t = 0;
};

class DqnAgent {
public:
    DqnAgent() = default;
    DqnAgent(const ProblemSpec& spec, const AgentConfig& cfg, std::uint64_t seed);

    const AgentConfig& config() const { return cfg_; }
    QNetwork& online() { return online_; }
    const QNetwork& online() const { return online_; }
    const QNetwork& target() const { return target_; }

    /// Epsilon-greedy over unselected cells; greedy ties break to the lowest
    /// index. Does not advance the exploration schedule.
    int select_action(const EnvState& state, double epsilon);
    /// Epsilon from the internal per-env-step counter, which this advances.
    int select_action_scheduled(const EnvState& state);

    double current_epsilon() const { return epsilon_at(env_steps_, cfg_); }
    long env_steps() const { return env_steps_; }
    long updates() const { return updates_; }

    /// TD target for one transition against the target network.
    double td_target(const Transition& t) const;

    /// One AdamW step on the minibatch TD loss; returns the loss, or nullopt
    /// when the buffer is smaller than the batch (no-op).
    std::optional<double> train_step(const ReplayBuffer& buffer);

    /// Supervised update minimizing cross-entropy of masked logits against
    /// expert actions; returns the mean loss.
    double imitation_step(const std::vector<const EnvState*>& states,
                          const std::vector<int>& actions, double learning_rate);

    void sync_target() { target_ = online_; }

    void save(const std::string& path) const;
    static DqnAgent load(const std::string& path, const ProblemSpec& spec,
                         const AgentConfig& cfg);

    rng::Stream& explore_stream() { return explore_; }
    rng::Stream& sample_stream() { return sample_; }

private:
    void apply_adamw(const QGrads& grads, double lr);

    AgentConfig cfg_;
    QNetwork online_, target_;
    AdamState adam_;
    rng::Stream explore_, sample_;
    long env_steps_ = 0;
    long updates_ = 0;
};

// ---------------------------------------------------------------------------
// Demonstrations and imitation pretraining
// ---------------------------------------------------------------------------

/// Gradient/curvature score with an even-coverage distance penalty; strictly
/// constant inputs fall back to the uniform pattern.
SelectionMask oracle_policy(const Field& input, int budget, const ProblemSpec& spec);

struct Demonstration {
    EnvState state;
    int action = 0;
    std::uint64_t instance = 0;
};

std::vector<Demonstration> collect_demonstrations(const std::vector<Instance>& instances,
                                                  int budget, const ProblemSpec& spec);

struct ImitationReport {
    double train_agreement = 0.0;
    double holdout_agreement = 0.0;
    double final_loss = 0.0;
    int epochs = 0;
};

/// Treats the Q outputs as action logits and trains them against oracle
/// actions; the last tenth of demonstration instances is held out.
ImitationReport imitation_pretrain(DqnAgent& agent, const std::vector<Demonstration>& demos);

// ---------------------------------------------------------------------------
// Heuristic baselines
// ---------------------------------------------------------------------------

SelectionMask select_uniform(int n_actions, int budget);
SelectionMask select_random(int n_actions, int budget, rng::Stream& stream);
SelectionMask select_gradient(const Field& input, int budget, const ProblemSpec& spec);
SelectionMask select_intensity(const Field& input, int budget, const ProblemSpec& spec);

/// Sequential GP-variance selection: v(x) = k(x,x) - k_x^T (K + lambda I)^{-1} k_x
/// conditioned on the cells already selected this episode; features are
/// (normalized position, normalized input value) under the proxy kernel.
SelectionMask select_variance(const Field& input, int budget, const ProblemSpec& spec,
                              const RidgeConfig& proxy_cfg);

/// Posterior variance at one cell given selected cells (test oracle surface).
double gp_posterior_variance(const Field& input, const std::vector<int>& selected, int cell,
                             const ProblemSpec& spec, const RidgeConfig& proxy_cfg);

}  // namespace rlmesh
