#include "acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace rlmesh {

// ---------------------------------------------------------------------------
// Environment
// ---------------------------------------------------------------------------

namespace {

std::vector<double> action_cell_values(const Field& input, const ProblemSpec& spec) {
    if (spec.kind != ProblemKind::darcy) return input.values;
    const int n = spec.darcy.grid_n;
    const int p = spec.darcy.patch_n;
    std::vector<double> vals(static_cast<std::size_t>(p) * static_cast<std::size_t>(p));
    for (int a = 0; a < p * p; ++a)
        vals[static_cast<std::size_t>(a)] =
            input.values[static_cast<std::size_t>(action_to_dense_index(a, spec))];
    (void)n;
    return vals;
}

}  // namespace

std::vector<double> env_encode_input(const Field& input, const ProblemSpec& spec) {
    std::vector<double> vals = action_cell_values(input, spec);
    auto [mn_it, mx_it] = std::minmax_element(vals.begin(), vals.end());
    double mn = *mn_it, mx = *mx_it;
    if (mx - mn <= 0.0) {
        std::fill(vals.begin(), vals.end(), 0.0);  // constant input fallback
        return vals;
    }
    for (double& v : vals) v = (v - mn) / (mx - mn);
    return vals;
}

EnvState env_reset(const Field& input, const ProblemSpec& spec) {
    EnvState s;
    s.encoded = env_encode_input(input, spec);
    s.mask.assign(s.encoded.size(), 0.0);
    s.step = 0;
    return s;
}

std::pair<EnvState, bool> env_step(const EnvState& state, int action, int budget) {
    if (action < 0 || action >= state.actions())
        throw std::invalid_argument("env_step: action out of range");
    if (state.mask[static_cast<std::size_t>(action)] != 0.0)
        throw std::invalid_argument("env_step: cell " + std::to_string(action) +
                                    " already selected");
    EnvState next = state;
    next.mask[static_cast<std::size_t>(action)] = 1.0;
    next.step = state.step + 1;
    return {std::move(next), next.step >= budget};
}

int action_to_dense_index(int action, const ProblemSpec& spec) {
    if (spec.kind != ProblemKind::darcy) return action;
    const int n = spec.darcy.grid_n;
    const int p = spec.darcy.patch_n;
    int pi = action / p, pj = action % p;
    int cell = n / p;
    int i = std::min(pi * cell + cell / 2, n - 1);
    int j = std::min(pj * cell + cell / 2, n - 1);
    return i * n + j;
}

// ---------------------------------------------------------------------------
// Q-network
// ---------------------------------------------------------------------------

QNetwork::QNetwork(int n_actions, int hidden_width, std::uint64_t seed)
    : n_actions_(n_actions), hidden_(hidden_width) {
    rng::Stream stream(seed, 31);
    auto init = [&](Eigen::MatrixXd& m, int rows, int cols, int fan_in) {
        m.resize(rows, cols);
        double bound = 1.0 / std::sqrt(double(fan_in));
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i)
                m(i, j) = stream.next_uniform(-bound, bound);
    };
    int in = input_dim();
    init(W1, hidden_, in, in);
    b1 = Eigen::VectorXd::Zero(hidden_);
    init(W2, hidden_, hidden_, hidden_);
    b2 = Eigen::VectorXd::Zero(hidden_);
    init(W3, n_actions_, hidden_, hidden_);
    b3 = Eigen::VectorXd::Zero(n_actions_);
}

Eigen::VectorXd QNetwork::pack_state(const EnvState& state, int budget_hint) {
    (void)budget_hint;
    const int n = state.actions();
    Eigen::VectorXd x(2 * n + 1);
    for (int i = 0; i < n; ++i) x(i) = state.mask[static_cast<std::size_t>(i)];
    for (int i = 0; i < n; ++i) x(n + i) = state.encoded[static_cast<std::size_t>(i)];
    x(2 * n) = double(state.step) / double(n);
    return x;
}

Eigen::VectorXd QNetwork::logits(const EnvState& state) const {
    Eigen::VectorXd x = pack_state(state, 0);
    Eigen::VectorXd a1 = ((W1 * x + b1).array().max(0.0)).matrix();
    Eigen::VectorXd a2 = ((W2 * a1 + b2).array().max(0.0)).matrix();
    return W3 * a2 + b3;
}

Eigen::VectorXd QNetwork::values(const EnvState& state) const {
    return logits(state).array().tanh();
}

std::vector<Eigen::Map<Eigen::VectorXd>> QNetwork::param_views() {
    return {
        {W1.data(), W1.size()}, {b1.data(), b1.size()}, {W2.data(), W2.size()},
        {b2.data(), b2.size()}, {W3.data(), W3.size()}, {b3.data(), b3.size()},
    };
}

std::vector<Eigen::Map<const Eigen::VectorXd>> QNetwork::param_views() const {
    return {
        {W1.data(), W1.size()}, {b1.data(), b1.size()}, {W2.data(), W2.size()},
        {b2.data(), b2.size()}, {W3.data(), W3.size()}, {b3.data(), b3.size()},
    };
}

void QGrads::set_zero(const QNetwork& net) {
    W1 = Eigen::MatrixXd::Zero(net.W1.rows(), net.W1.cols());
    W2 = Eigen::MatrixXd::Zero(net.W2.rows(), net.W2.cols());
    W3 = Eigen::MatrixXd::Zero(net.W3.rows(), net.W3.cols());
    b1 = Eigen::VectorXd::Zero(net.b1.size());
    b2 = Eigen::VectorXd::Zero(net.b2.size());
    b3 = Eigen::VectorXd::Zero(net.b3.size());
}

double QGrads::squared_norm() const {
    return W1.squaredNorm() + W2.squaredNorm() + W3.squaredNorm() + b1.squaredNorm() +
           b2.squaredNorm() + b3.squaredNorm();
}

void QGrads::scale(double s) {
    W1 *= s; W2 *= s; W3 *= s; b1 *= s; b2 *= s; b3 *= s;
}

QForward q_forward(const QNetwork& net, const Eigen::MatrixXd& X) {
    QForward f;
    f.X = X;
    f.A1 = ((net.W1 * X).colwise() + net.b1).array().max(0.0);
    f.A2 = ((net.W2 * f.A1).colwise() + net.b2).array().max(0.0);
    f.Z3 = (net.W3 * f.A2).colwise() + net.b3;
    f.Out = f.Z3.array().tanh();
    return f;
}

QGrads q_backward(const QNetwork& net, const QForward& fwd, const Eigen::MatrixXd& dZ3) {
    QGrads g;
    g.W3 = dZ3 * fwd.A2.transpose();
    g.b3 = dZ3.rowwise().sum();
    Eigen::MatrixXd dA2 = net.W3.transpose() * dZ3;
    Eigen::MatrixXd dZ2 = dA2.array() * (fwd.A2.array() > 0.0).cast<double>();
    g.W2 = dZ2 * fwd.A1.transpose();
    g.b2 = dZ2.rowwise().sum();
    Eigen::MatrixXd dA1 = net.W2.transpose() * dZ2;
    Eigen::MatrixXd dZ1 = dA1.array() * (fwd.A1.array() > 0.0).cast<double>();
    g.W1 = dZ1 * fwd.X.transpose();
    g.b1 = dZ1.rowwise().sum();
    return g;
}

// ---------------------------------------------------------------------------
// Replay
// ---------------------------------------------------------------------------

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw std::invalid_argument("ReplayBuffer capacity must be positive");
    data_.reserve(std::min<std::size_t>(capacity_, 4096));
}

void ReplayBuffer::push(Transition t) {
    if (count_ < capacity_) {
        data_.push_back(std::move(t));
        ++count_;
    } else {
        data_[head_] = std::move(t);
        head_ = (head_ + 1) % capacity_;
    }
}

const Transition& ReplayBuffer::at(std::size_t i) const {
    if (i >= count_) throw std::out_of_range("ReplayBuffer::at");
    return data_[(head_ + i) % count_];
}

// ---------------------------------------------------------------------------
// Agent
// ---------------------------------------------------------------------------

void AgentConfig::validate() const {
    if (!(learning_rate > 0)) throw std::invalid_argument("agent.learning_rate must be > 0");
    if (weight_decay < 0) throw std::invalid_argument("agent.weight_decay must be >= 0");
    if (!(discount > 0) || discount > 1) throw std::invalid_argument("agent.discount must be in (0, 1]");
    if (batch_size < 1) throw std::invalid_argument("agent.batch_size must be >= 1");
    if (!(epsilon_floor < epsilon_start))
        throw std::invalid_argument("agent.epsilon_floor must be below epsilon_start");
    if (!(epsilon_decay > 0) || epsilon_decay >= 1)
        throw std::invalid_argument("agent.epsilon_decay must lie in (0, 1)");
    if (target_sync_interval < 1)
        throw std::invalid_argument("agent.target_sync_interval must be >= 1");
    if (!(gradient_clip > 0)) throw std::invalid_argument("agent.gradient_clip must be > 0");
    if (hidden_width < 1) throw std::invalid_argument("agent.hidden_width must be >= 1");
    if (replay_capacity < 1) throw std::invalid_argument("agent.replay_capacity must be >= 1");
}

double epsilon_at(long step, const AgentConfig& cfg) {
    if (step < 0) throw std::invalid_argument("epsilon_at: step must be >= 0");
    return std::max(cfg.epsilon_floor,
                    cfg.epsilon_start * std::pow(cfg.epsilon_decay, double(step)));
}

DqnAgent::DqnAgent(const ProblemSpec& spec, const AgentConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      online_(spec.action_count(), cfg.hidden_width, rng::hash_combine(seed, 41)),
      explore_(seed, 42),
      sample_(seed, 43) {
    cfg_.validate();
    target_ = online_;
}

namespace {

int masked_argmax(const Eigen::VectorXd& q, const std::vector<double>& mask) {
    int best = -1;
    double best_v = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(mask.size()); ++i) {
        if (mask[static_cast<std::size_t>(i)] != 0.0) continue;
        double v = q(i);
        if (v > best_v) {  // strict: ties stay at the lowest index
            best_v = v;
            best = i;
        }
    }
    if (best < 0) throw std::invalid_argument("no unselected cell available");
    return best;
}

}  // namespace

int DqnAgent::select_action(const EnvState& state, double epsilon) {
    double u = explore_.next_unit();
    if (u < epsilon) {
        std::vector<int> open;
        for (int i = 0; i < state.actions(); ++i)
            if (state.mask[static_cast<std::size_t>(i)] == 0.0) open.push_back(i);
        if (open.empty()) throw std::invalid_argument("no unselected cell available");
        return open[static_cast<std::size_t>(explore_.next_below(open.size()))];
    }
    return masked_argmax(online_.values(state), state.mask);
}

int DqnAgent::select_action_scheduled(const EnvState& state) {
    double eps = current_epsilon();
    int a = select_action(state, eps);
    ++env_steps_;
    return a;
}

double DqnAgent::td_target(const Transition& t) const {
    if (t.terminal) return t.reward;
    Eigen::VectorXd q = target_.values(t.next);
    double best = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (int i = 0; i < t.next.actions(); ++i) {
        if (t.next.mask[static_cast<std::size_t>(i)] != 0.0) continue;
        best = std::max(best, q(i));
        any = true;
    }
    if (!any) return t.reward;
    return t.reward + cfg_.discount * best;
}

std::optional<double> DqnAgent::train_step(const ReplayBuffer& buffer) {
    const int B = cfg_.batch_size;
    if (buffer.size() < static_cast<std::size_t>(B)) return std::nullopt;

    std::vector<const Transition*> batch;
    batch.reserve(static_cast<std::size_t>(B));
    for (int i = 0; i < B; ++i)
        batch.push_back(&buffer.at(static_cast<std::size_t>(sample_.next_below(buffer.size()))));

    const int in = online_.input_dim();
    Eigen::MatrixXd X(in, B);
    Eigen::VectorXd targets(B);
    for (int i = 0; i < B; ++i) {
        X.col(i) = QNetwork::pack_state(batch[static_cast<std::size_t>(i)]->state, 0);
        targets(i) = td_target(*batch[static_cast<std::size_t>(i)]);
    }

    QForward fwd = q_forward(online_, X);
    Eigen::MatrixXd dZ3 = Eigen::MatrixXd::Zero(online_.actions(), B);
    double loss = 0.0;
    for (int i = 0; i < B; ++i) {
        int a = batch[static_cast<std::size_t>(i)]->action;
        double q = fwd.Out(a, i);
        double diff = q - targets(i);
        loss += diff * diff;
        dZ3(a, i) = 2.0 * diff / double(B) * (1.0 - q * q);  // through tanh
    }
    loss /= double(B);

    QGrads grads = q_backward(online_, fwd, dZ3);
    apply_adamw(grads, cfg_.learning_rate);
    ++updates_;
    if (updates_ % cfg_.target_sync_interval == 0) sync_target();
    return loss;
}

double DqnAgent::imitation_step(const std::vector<const EnvState*>& states,
                                const std::vector<int>& actions, double learning_rate) {
    const int B = static_cast<int>(states.size());
    if (B == 0) return 0.0;
    const int in = online_.input_dim();
    const int n = online_.actions();
    Eigen::MatrixXd X(in, B);
    for (int i = 0; i < B; ++i)
        X.col(i) = QNetwork::pack_state(*states[static_cast<std::size_t>(i)], 0);

    QForward fwd = q_forward(online_, X);
    Eigen::MatrixXd dZ3 = Eigen::MatrixXd::Zero(n, B);
    double loss = 0.0;
    for (int i = 0; i < B; ++i) {
        const EnvState& s = *states[static_cast<std::size_t>(i)];
        // masked softmax over unselected cells of the pre-tanh logits
        double mx = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < n; ++a)
            if (s.mask[static_cast<std::size_t>(a)] == 0.0) mx = std::max(mx, fwd.Z3(a, i));
        double z = 0.0;
        for (int a = 0; a < n; ++a)
            if (s.mask[static_cast<std::size_t>(a)] == 0.0) z += std::exp(fwd.Z3(a, i) - mx);
        int expert = actions[static_cast<std::size_t>(i)];
        double logp = fwd.Z3(expert, i) - mx - std::log(z);
        loss -= logp;
        for (int a = 0; a < n; ++a) {
            if (s.mask[static_cast<std::size_t>(a)] != 0.0) continue;
            double p = std::exp(fwd.Z3(a, i) - mx) / z;
            dZ3(a, i) = (p - (a == expert ? 1.0 : 0.0)) / double(B);
        }
    }
    loss /= double(B);

    QGrads grads = q_backward(online_, fwd, dZ3);
    apply_adamw(grads, learning_rate);
    ++updates_;
    if (updates_ % cfg_.target_sync_interval == 0) sync_target();
    return loss;
}

void DqnAgent::apply_adamw(const QGrads& grads, double lr) {
    double norm = std::sqrt(grads.squared_norm());
    QGrads clipped = grads;
    if (norm > cfg_.gradient_clip) clipped.scale(cfg_.gradient_clip / norm);

    auto params = online_.param_views();
    std::vector<Eigen::Map<const Eigen::VectorXd>> gviews = {
        {clipped.W1.data(), clipped.W1.size()}, {clipped.b1.data(), clipped.b1.size()},
        {clipped.W2.data(), clipped.W2.size()}, {clipped.b2.data(), clipped.b2.size()},
        {clipped.W3.data(), clipped.W3.size()}, {clipped.b3.data(), clipped.b3.size()},
    };
    if (adam_.m.empty()) {
        for (const auto& p : params) {
            adam_.m.emplace_back(Eigen::VectorXd::Zero(p.size()));
            adam_.v.emplace_back(Eigen::VectorXd::Zero(p.size()));
        }
    }
    ++adam_.t;
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double bc1 = 1.0 - std::pow(beta1, double(adam_.t));
    double bc2 = 1.0 - std::pow(beta2, double(adam_.t));
    for (std::size_t p = 0; p < params.size(); ++p) {
        adam_.m[p] = beta1 * adam_.m[p] + (1.0 - beta1) * gviews[p];
        adam_.v[p] = beta2 * adam_.v[p].array().matrix() +
                     (1.0 - beta2) * gviews[p].array().square().matrix();
        Eigen::ArrayXd mhat = adam_.m[p].array() / bc1;
        Eigen::ArrayXd vhat = adam_.v[p].array() / bc2;
        params[p].array() -= lr * (mhat / (vhat.sqrt() + eps));
        params[p].array() -= lr * cfg_.weight_decay * params[p].array();  // decoupled decay
    }
}

// ---------------------------------------------------------------------------
// Agent checkpoints (container format)
// ---------------------------------------------------------------------------

namespace {

constexpr char kAgentMagic[4] = {'R', 'L', 'M', 'A'};
constexpr std::uint32_t kAgentVersion = 1;

void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}
void put_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(os, bits);
}
std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
    return v;
}
double get_f64(std::istream& is) {
    std::uint64_t bits = get_u64(is);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void put_vec(std::ostream& os, const Eigen::Map<const Eigen::VectorXd>& v) {
    put_u64(os, static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) put_f64(os, v(i));
}

void get_vec(std::istream& is, Eigen::Map<Eigen::VectorXd> v) {
    std::uint64_t len = get_u64(is);
    if (len != static_cast<std::uint64_t>(v.size()))
        throw std::runtime_error("agent checkpoint: parameter shape mismatch");
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = get_f64(is);
}

}  // namespace

void DqnAgent::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("agent save: cannot open " + path);
    os.write(kAgentMagic, 4);
    put_u64(os, kAgentVersion);
    put_u64(os, static_cast<std::uint64_t>(online_.actions()));
    put_u64(os, static_cast<std::uint64_t>(online_.hidden()));
    for (const auto& v : online_.param_views()) put_vec(os, v);
    for (const auto& v : target_.param_views()) put_vec(os, v);
    put_u64(os, static_cast<std::uint64_t>(adam_.m.size()));
    for (const auto& m : adam_.m) put_vec(os, {m.data(), m.size()});
    for (const auto& v : adam_.v) put_vec(os, {v.data(), v.size()});
    put_u64(os, static_cast<std::uint64_t>(adam_.t));
    put_u64(os, static_cast<std::uint64_t>(env_steps_));
    put_u64(os, static_cast<std::uint64_t>(updates_));
    put_u64(os, explore_.key());
    put_u64(os, explore_.counter());
    put_u64(os, sample_.key());
    put_u64(os, sample_.counter());
    if (!os) throw std::runtime_error("agent save: write failed for " + path);
}

DqnAgent DqnAgent::load(const std::string& path, const ProblemSpec& spec,
                        const AgentConfig& cfg) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("agent load: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kAgentMagic, 4) != 0)
        throw std::runtime_error("agent load: bad magic in " + path);
    if (get_u64(is) != kAgentVersion) throw std::runtime_error("agent load: bad version");

    DqnAgent agent(spec, cfg, 0);
    std::uint64_t actions = get_u64(is);
    std::uint64_t hidden = get_u64(is);
    if (actions != static_cast<std::uint64_t>(agent.online_.actions()) ||
        hidden != static_cast<std::uint64_t>(agent.online_.hidden()))
        throw std::runtime_error("agent load: checkpoint shape does not match config");
    for (auto v : agent.online_.param_views()) get_vec(is, v);
    for (auto v : agent.target_.param_views()) get_vec(is, v);
    std::uint64_t nparams = get_u64(is);
    agent.adam_.m.resize(nparams);
    agent.adam_.v.resize(nparams);
    auto views = agent.online_.param_views();
    for (std::size_t p = 0; p < nparams; ++p) {
        agent.adam_.m[p] = Eigen::VectorXd::Zero(views[p].size());
        get_vec(is, {agent.adam_.m[p].data(), agent.adam_.m[p].size()});
    }
    for (std::size_t p = 0; p < nparams; ++p) {
        agent.adam_.v[p] = Eigen::VectorXd::Zero(views[p].size());
        get_vec(is, {agent.adam_.v[p].data(), agent.adam_.v[p].size()});
    }
    agent.adam_.t = static_cast<long>(get_u64(is));
    agent.env_steps_ = static_cast<long>(get_u64(is));
    agent.updates_ = static_cast<long>(get_u64(is));
    std::uint64_t ek = get_u64(is), ec = get_u64(is), sk = get_u64(is), sc = get_u64(is);
    agent.explore_ = rng::Stream(ek);
    agent.explore_.set_counter(ec);
    agent.sample_ = rng::Stream(sk);
    agent.sample_.set_counter(sc);
    if (!is) throw std::runtime_error("agent load: truncated file " + path);
    return agent;
}

// ---------------------------------------------------------------------------
// Oracle policy and demonstrations
// ---------------------------------------------------------------------------

namespace {

std::vector<double> feature_score(const std::vector<double>& v, const ProblemSpec& spec) {
    const int n = static_cast<int>(v.size());
    std::vector<double> score(static_cast<std::size_t>(n), 0.0);
    if (spec.kind == ProblemKind::darcy) {
        const int p = spec.darcy.patch_n;
        auto at = [&](int i, int j) {
            return v[static_cast<std::size_t>(i) * static_cast<std::size_t>(p) +
                     static_cast<std::size_t>(j)];
        };
        for (int i = 0; i < p; ++i) {
            for (int j = 0; j < p; ++j) {
                double gx = (i == 0) ? at(1, j) - at(0, j)
                           : (i == p - 1) ? at(p - 1, j) - at(p - 2, j)
                                          : 0.5 * (at(i + 1, j) - at(i - 1, j));
                double gy = (j == 0) ? at(i, 1) - at(i, 0)
                           : (j == p - 1) ? at(i, p - 1) - at(i, p - 2)
                                          : 0.5 * (at(i, j + 1) - at(i, j - 1));
                double lap = 0.0;
                if (i > 0 && i < p - 1 && j > 0 && j < p - 1)
                    lap = at(i + 1, j) + at(i - 1, j) + at(i, j + 1) + at(i, j - 1) -
                          4.0 * at(i, j);
                score[static_cast<std::size_t>(i) * static_cast<std::size_t>(p) +
                      static_cast<std::size_t>(j)] =
                    std::sqrt(gx * gx + gy * gy) + std::abs(lap);
            }
        }
        return score;
    }
    const bool cyclic = spec.kind == ProblemKind::lorenz96;
    for (int i = 0; i < n; ++i) {
        double g, c;
        if (cyclic) {
            double vp = v[static_cast<std::size_t>((i + 1) % n)];
            double vm = v[static_cast<std::size_t>((i + n - 1) % n)];
            g = 0.5 * std::abs(vp - vm);
            c = std::abs(vp - 2.0 * v[static_cast<std::size_t>(i)] + vm);
        } else if (i == 0) {
            g = std::abs(v[1] - v[0]);
            c = 0.0;
        } else if (i == n - 1) {
            g = std::abs(v[static_cast<std::size_t>(n - 1)] - v[static_cast<std::size_t>(n - 2)]);
            c = 0.0;
        } else {
            g = 0.5 * std::abs(v[static_cast<std::size_t>(i + 1)] - v[static_cast<std::size_t>(i - 1)]);
            c = std::abs(v[static_cast<std::size_t>(i + 1)] - 2.0 * v[static_cast<std::size_t>(i)] +
                         v[static_cast<std::size_t>(i - 1)]);
        }
        score[static_cast<std::size_t>(i)] = g + c;
    }
    return score;
}

double cell_distance(int a, int b, int n, const ProblemSpec& spec) {
    if (spec.kind == ProblemKind::darcy) {
        const int p = spec.darcy.patch_n;
        double di = a / p - b / p, dj = a % p - b % p;
        return std::sqrt(di * di + dj * dj) / double(p);
    }
    double d = std::abs(a - b);
    if (spec.kind == ProblemKind::lorenz96) d = std::min(d, double(n) - d);
    return d / double(n);
}

}  // namespace

SelectionMask oracle_policy(const Field& input, int budget, const ProblemSpec& spec) {
    const int n = spec.action_count();
    if (budget < 1 || budget > n)
        throw std::invalid_argument("oracle_policy: budget must lie in [1, action count]");
    std::vector<double> vals = action_cell_values(input, spec);
    std::vector<double> score = feature_score(vals, spec);
    double max_score = *std::max_element(score.begin(), score.end());
    if (!(max_score > 0.0)) return select_uniform(n, budget);  // constant input: even spread

    // Feature phase: the strongest gradient/curvature cells, ties to the
    // lowest index. Coverage phase: farthest-point fill, so the remaining
    // budget spreads evenly; its min-distance objective is what keeps the
    // policy stable across instances (and imitable by the agent).
    SelectionMask mask;
    mask.budget = budget;
    std::vector<char> chosen(static_cast<std::size_t>(n), 0);
    int feature_picks = std::max(1, budget / 3);
    {
        std::vector<int> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            if (score[static_cast<std::size_t>(a)] != score[static_cast<std::size_t>(b)])
                return score[static_cast<std::size_t>(a)] > score[static_cast<std::size_t>(b)];
            return a < b;
        });
        for (int j = 0; j < n && mask.size() < feature_picks; ++j) {
            int i = order[static_cast<std::size_t>(j)];
            if (!(score[static_cast<std::size_t>(i)] > 0.0)) break;
            chosen[static_cast<std::size_t>(i)] = 1;
            mask.indices.push_back(i);
        }
    }
    while (mask.size() < budget) {
        int best = -1;
        double best_d = -1.0;
        for (int i = 0; i < n; ++i) {
            if (chosen[static_cast<std::size_t>(i)]) continue;
            double dmin = std::numeric_limits<double>::infinity();
            for (int c : mask.indices) dmin = std::min(dmin, cell_distance(i, c, n, spec));
            if (dmin > best_d) {
                best_d = dmin;
                best = i;
            }
        }
        chosen[static_cast<std::size_t>(best)] = 1;
        mask.indices.push_back(best);
    }
    return mask;
}

std::vector<Demonstration> collect_demonstrations(const std::vector<Instance>& instances,
                                                  int budget, const ProblemSpec& spec) {
    std::vector<Demonstration> demos;
    demos.reserve(instances.size() * static_cast<std::size_t>(budget));
    for (const auto& inst : instances) {
        SelectionMask mask = oracle_policy(inst.input, budget, spec);
        EnvState state = env_reset(inst.input, spec);
        for (int a : mask.indices) {
            demos.push_back({state, a, inst.id});
            state = env_step(state, a, budget).first;
        }
    }
    return demos;
}

ImitationReport imitation_pretrain(DqnAgent& agent, const std::vector<Demonstration>& demos) {
    if (demos.empty()) throw std::invalid_argument("imitation_pretrain: no demonstrations");
    const AgentConfig& cfg = agent.config();

    // Hold out the last tenth of demonstration instances.
    std::vector<std::uint64_t> ids;
    for (const auto& d : demos)
        if (ids.empty() || ids.back() != d.instance) ids.push_back(d.instance);
    std::size_t holdout_from = ids.size() - std::max<std::size_t>(1, ids.size() / 10);
    std::uint64_t first_holdout = ids[holdout_from];

    std::vector<std::size_t> train_idx, holdout_idx;
    for (std::size_t i = 0; i < demos.size(); ++i) {
        bool hold = std::find(ids.begin() + static_cast<std::ptrdiff_t>(holdout_from), ids.end(),
                              demos[i].instance) != ids.end();
        (hold ? holdout_idx : train_idx).push_back(i);
    }
    (void)first_holdout;

    ImitationReport report;
    report.epochs = cfg.pretrain_epochs;
    std::vector<std::size_t> order = train_idx;
    for (int epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
        rng::shuffle(order, agent.sample_stream());
        double loss = 0.0;
        int batches = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.pretrain_batch)) {
            std::vector<const EnvState*> states;
            std::vector<int> actions;
            for (std::size_t i = start;
                 i < std::min(order.size(), start + static_cast<std::size_t>(cfg.pretrain_batch));
                 ++i) {
                states.push_back(&demos[order[i]].state);
                actions.push_back(demos[order[i]].action);
            }
            loss += agent.imitation_step(states, actions, cfg.pretrain_learning_rate);
            ++batches;
        }
        report.final_loss = loss / std::max(batches, 1);
    }

    auto agreement = [&](const std::vector<std::size_t>& idx) {
        if (idx.empty()) return 0.0;
        long hits = 0;
        for (std::size_t i : idx) {
            Eigen::VectorXd q = agent.online().values(demos[i].state);
            if (masked_argmax(q, demos[i].state.mask) == demos[i].action) ++hits;
        }
        return double(hits) / double(idx.size());
    };
    report.train_agreement = agreement(train_idx);
    report.holdout_agreement = agreement(holdout_idx);
    agent.sync_target();
    return report;
}

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

namespace {

SelectionMask top_k_by_score(const std::vector<double>& score, int budget) {
    const int n = static_cast<int>(score.size());
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (score[static_cast<std::size_t>(a)] != score[static_cast<std::size_t>(b)])
            return score[static_cast<std::size_t>(a)] > score[static_cast<std::size_t>(b)];
        return a < b;  // ties to the lowest index
    });
    SelectionMask mask;
    mask.budget = budget;
    mask.indices.assign(order.begin(), order.begin() + budget);
    return mask;
}

void check_budget(int n, int budget) {
    if (budget < 1 || budget > n)
        throw std::invalid_argument("budget must lie in [1, action count]");
}

}  // namespace

SelectionMask select_uniform(int n_actions, int budget) {
    check_budget(n_actions, budget);
    SelectionMask mask;
    mask.budget = budget;
    std::vector<char> used(static_cast<std::size_t>(n_actions), 0);
    for (int j = 0; j < budget; ++j) {
        double pos = (budget == 1) ? 0.0
                                   : double(j) * double(n_actions - 1) / double(budget - 1);
        int idx = static_cast<int>(std::lround(pos));
        if (!used[static_cast<std::size_t>(idx)]) {
            used[static_cast<std::size_t>(idx)] = 1;
            mask.indices.push_back(idx);
        }
    }
    for (int i = 0; i < n_actions && mask.size() < budget; ++i) {
        if (!used[static_cast<std::size_t>(i)]) {
            used[static_cast<std::size_t>(i)] = 1;
            mask.indices.push_back(i);
        }
    }
    return mask;
}

SelectionMask select_random(int n_actions, int budget, rng::Stream& stream) {
    check_budget(n_actions, budget);
    std::vector<int> pool(static_cast<std::size_t>(n_actions));
    std::iota(pool.begin(), pool.end(), 0);
    SelectionMask mask;
    mask.budget = budget;
    for (int j = 0; j < budget; ++j) {
        std::size_t pick = static_cast<std::size_t>(j) +
                           static_cast<std::size_t>(stream.next_below(
                               static_cast<std::uint64_t>(n_actions - j)));
        std::swap(pool[static_cast<std::size_t>(j)], pool[pick]);
        mask.indices.push_back(pool[static_cast<std::size_t>(j)]);
    }
    return mask;
}

SelectionMask select_gradient(const Field& input, int budget, const ProblemSpec& spec) {
    const int n = spec.action_count();
    check_budget(n, budget);
    std::vector<double> vals = action_cell_values(input, spec);
    std::vector<double> score(static_cast<std::size_t>(n), 0.0);
    if (spec.kind == ProblemKind::darcy) {
        const int p = spec.darcy.patch_n;
        auto at = [&](int i, int j) {
            return vals[static_cast<std::size_t>(i) * static_cast<std::size_t>(p) +
                        static_cast<std::size_t>(j)];
        };
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j) {
                double gx = (i == 0) ? at(1, j) - at(0, j)
                           : (i == p - 1) ? at(p - 1, j) - at(p - 2, j)
                                          : 0.5 * (at(i + 1, j) - at(i - 1, j));
                double gy = (j == 0) ? at(i, 1) - at(i, 0)
                           : (j == p - 1) ? at(i, p - 1) - at(i, p - 2)
                                          : 0.5 * (at(i, j + 1) - at(i, j - 1));
                score[static_cast<std::size_t>(i) * static_cast<std::size_t>(p) +
                      static_cast<std::size_t>(j)] = std::sqrt(gx * gx + gy * gy);
            }
    } else {
        const bool cyclic = spec.kind == ProblemKind::lorenz96;
        for (int i = 0; i < n; ++i) {
            if (cyclic) {
                double vp = vals[static_cast<std::size_t>((i + 1) % n)];
                double vm = vals[static_cast<std::size_t>((i + n - 1) % n)];
                score[static_cast<std::size_t>(i)] = 0.5 * std::abs(vp - vm);
            } else if (i == 0) {
                score[0] = std::abs(vals[1] - vals[0]);
            } else if (i == n - 1) {
                score[static_cast<std::size_t>(i)] =
                    std::abs(vals[static_cast<std::size_t>(n - 1)] -
                             vals[static_cast<std::size_t>(n - 2)]);
            } else {
                score[static_cast<std::size_t>(i)] =
                    0.5 * std::abs(vals[static_cast<std::size_t>(i + 1)] -
                                   vals[static_cast<std::size_t>(i - 1)]);
            }
        }
    }
    return top_k_by_score(score, budget);
}

SelectionMask select_intensity(const Field& input, int budget, const ProblemSpec& spec) {
    const int n = spec.action_count();
    check_budget(n, budget);
    std::vector<double> vals = action_cell_values(input, spec);
    for (double& v : vals) v = std::abs(v);
    return top_k_by_score(vals, budget);
}

namespace {

std::vector<std::vector<double>> variance_features(const Field& input, const ProblemSpec& spec) {
    std::vector<double> enc = env_encode_input(input, spec);
    const int n = static_cast<int>(enc.size());
    std::vector<std::vector<double>> z;
    z.reserve(static_cast<std::size_t>(n));
    if (spec.kind == ProblemKind::darcy) {
        const int p = spec.darcy.patch_n;
        for (int a = 0; a < n; ++a)
            z.push_back({double(a / p) / double(p - 1), double(a % p) / double(p - 1),
                         enc[static_cast<std::size_t>(a)]});
    } else {
        for (int a = 0; a < n; ++a)
            z.push_back({double(a) / double(n - 1), enc[static_cast<std::size_t>(a)]});
    }
    return z;
}

double posterior_variance(const std::vector<std::vector<double>>& z,
                          const std::vector<int>& selected, int cell, double gamma,
                          double lambda) {
    const std::size_t s = selected.size();
    if (s == 0) return rbf_kernel(z[static_cast<std::size_t>(cell)],
                                  z[static_cast<std::size_t>(cell)], gamma);
    Eigen::MatrixXd K(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s));
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = 0; j < s; ++j)
            K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                rbf_kernel(z[static_cast<std::size_t>(selected[i])],
                           z[static_cast<std::size_t>(selected[j])], gamma);
    K.diagonal().array() += lambda;
    Eigen::VectorXd k(static_cast<Eigen::Index>(s));
    for (std::size_t i = 0; i < s; ++i)
        k(static_cast<Eigen::Index>(i)) = rbf_kernel(
            z[static_cast<std::size_t>(cell)], z[static_cast<std::size_t>(selected[i])], gamma);
    Eigen::LLT<Eigen::MatrixXd> llt(K);
    return 1.0 - k.dot(llt.solve(k));
}

}  // namespace

SelectionMask select_variance(const Field& input, int budget, const ProblemSpec& spec,
                              const RidgeConfig& proxy_cfg) {
    const int n = spec.action_count();
    check_budget(n, budget);
    auto z = variance_features(input, spec);
    SelectionMask mask;
    mask.budget = budget;
    std::vector<char> chosen(static_cast<std::size_t>(n), 0);
    for (int pick = 0; pick < budget; ++pick) {
        int best = -1;
        double best_v = -std::numeric_limits<double>::infinity();
        const std::size_t s = mask.indices.size();
        // one factorization per step, shared across candidate cells
        Eigen::LLT<Eigen::MatrixXd> llt;
        if (s > 0) {
            Eigen::MatrixXd K(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s));
            for (std::size_t i = 0; i < s; ++i)
                for (std::size_t j = 0; j < s; ++j)
                    K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                        rbf_kernel(z[static_cast<std::size_t>(mask.indices[i])],
                                   z[static_cast<std::size_t>(mask.indices[j])],
                                   proxy_cfg.gamma);
            K.diagonal().array() += proxy_cfg.lambda;
            llt.compute(K);
        }
        Eigen::VectorXd k(static_cast<Eigen::Index>(s));
        for (int i = 0; i < n; ++i) {
            if (chosen[static_cast<std::size_t>(i)]) continue;
            double v;
            if (s == 0) {
                v = 1.0;
            } else {
                for (std::size_t j = 0; j < s; ++j)
                    k(static_cast<Eigen::Index>(j)) =
                        rbf_kernel(z[static_cast<std::size_t>(i)],
                                   z[static_cast<std::size_t>(mask.indices[j])],
                                   proxy_cfg.gamma);
                v = 1.0 - k.dot(llt.solve(k));
            }
            if (v > best_v) {
                best_v = v;
                best = i;
            }
        }
        chosen[static_cast<std::size_t>(best)] = 1;
        mask.indices.push_back(best);
    }
    return mask;
}

double gp_posterior_variance(const Field& input, const std::vector<int>& selected, int cell,
                             const ProblemSpec& spec, const RidgeConfig& proxy_cfg) {
    auto z = variance_features(input, spec);
    return posterior_variance(z, selected, cell, proxy_cfg.gamma, proxy_cfg.lambda);
}

}  // namespace rlmesh
