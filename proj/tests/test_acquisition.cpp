#include "acquisition.hpp"

#include "generators.hpp"
#include "rng.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <set>

using namespace rlmesh;

namespace {

ProblemSpec toy_spec(int n) {
    ProblemSpec s;
    s.kind = ProblemKind::burgers;
    s.burgers.grid_n = n;
    return s;
}

Field field_of(std::vector<double> vals) {
    Field f;
    f.values = std::move(vals);
    return f;
}

AgentConfig toy_agent_cfg(int hidden = 16) {
    AgentConfig c;
    c.hidden_width = hidden;
    c.batch_size = 4;
    c.replay_capacity = 64;
    return c;
}

}  // namespace

TEST_CASE("env reset: empty mask, unit-range encoding, determinism") {
    ProblemSpec spec = toy_spec(9);
    Field input = field_of({3, -1, 0, 5, 2, 2, 2, -4, 1});
    EnvState s = env_reset(input, spec);
    CHECK(s.step == 0);
    CHECK(std::accumulate(s.mask.begin(), s.mask.end(), 0.0) == 0.0);
    for (double v : s.encoded) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    CHECK(*std::max_element(s.encoded.begin(), s.encoded.end()) == 1.0);
    CHECK(*std::min_element(s.encoded.begin(), s.encoded.end()) == 0.0);

    EnvState s2 = env_reset(input, spec);
    CHECK(s.encoded == s2.encoded);

    Field constant = field_of(std::vector<double>(9, 3.25));
    EnvState sc = env_reset(constant, spec);
    for (double v : sc.encoded) CHECK(v == 0.0);
}

TEST_CASE("env step: mask bit, budget termination, reselect refusal") {
    ProblemSpec spec = toy_spec(6);
    Field input = field_of({0, 1, 2, 3, 4, 5});
    EnvState s = env_reset(input, spec);
    const int B = 3;
    std::set<int> picked;
    bool done = false;
    for (int a : {4, 1, 5}) {
        auto [next, d] = env_step(s, a, B);
        int changed = 0;
        for (int i = 0; i < 6; ++i)
            changed += next.mask[static_cast<std::size_t>(i)] != s.mask[static_cast<std::size_t>(i)];
        CHECK(changed == 1);
        CHECK(next.step == s.step + 1);
        picked.insert(a);
        s = next;
        done = d;
    }
    CHECK(done);
    CHECK(picked.size() == 3);
    CHECK_THROWS_AS(env_step(s, 4, 6), std::invalid_argument);
}

TEST_CASE("select_action: forced argmax picks the engineered favorite") {
    ProblemSpec spec = toy_spec(9);
    DqnAgent agent(spec, toy_agent_cfg(), 7);
    agent.online().W3.setZero();
    agent.online().b3.setConstant(-0.5);
    agent.online().b3(7) = 2.0;
    EnvState s = env_reset(field_of({1, 2, 3, 4, 5, 6, 7, 8, 9}), spec);
    CHECK(agent.select_action(s, 0.0) == 7);
    auto stepped = env_step(s, 7, 9).first;
    CHECK(agent.select_action(stepped, 0.0) != 7);
}

TEST_CASE("select_action at epsilon=1 is uniform over unselected cells") {
    ProblemSpec spec = toy_spec(8);
    DqnAgent agent(spec, toy_agent_cfg(), 11);
    EnvState s = env_reset(field_of({1, 2, 3, 4, 5, 6, 7, 8}), spec);
    s = env_step(s, 2, 8).first;  // 7 open cells remain
    s = env_step(s, 6, 8).first;  // 6 open cells remain
    std::map<int, long> counts;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) counts[agent.select_action(s, 1.0)]++;
    CHECK(counts.count(2) == 0);
    CHECK(counts.count(6) == 0);
    CHECK(counts.size() == 6);
    double expected = draws / 6.0;
    double chi2 = 0.0;
    for (const auto& [a, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
    CHECK(chi2 < 20.515);  // chi^2(5 dof) at p = 0.001
}

TEST_CASE("select_action never returns an already selected cell (fuzz)") {
    ProblemSpec spec = toy_spec(12);
    DqnAgent agent(spec, toy_agent_cfg(), 13);
    rng::Stream s(13, 1);
    for (int trial = 0; trial < 1000; ++trial) {
        EnvState state = env_reset(field_of({1, 5, 2, 8, 3, 9, 4, 7, 6, 0, 11, 10}), spec);
        int presteps = 1 + int(s.next_below(10));
        for (int i = 0; i < presteps; ++i) {
            std::vector<int> open;
            for (int a = 0; a < 12; ++a)
                if (state.mask[static_cast<std::size_t>(a)] == 0.0) open.push_back(a);
            state = env_step(state, open[static_cast<std::size_t>(s.next_below(open.size()))], 12).first;
        }
        int a = agent.select_action(state, s.next_unit());
        CHECK(state.mask[static_cast<std::size_t>(a)] == 0.0);
    }
}

TEST_CASE("epsilon schedule values") {
    CHECK(epsilon_at(0) == 1.0);
    CHECK(epsilon_at(100) == doctest::Approx(0.6057704364907279).epsilon(1e-12));
    CHECK(epsilon_at(1000) == 0.1);  // floor dominates 0.995^1000 ~ 0.00665
    CHECK_THROWS_AS(epsilon_at(-1), std::invalid_argument);
}

TEST_CASE("replay buffer: FIFO eviction of exactly the first element") {
    ProblemSpec spec = toy_spec(4);
    EnvState s = env_reset(field_of({1, 2, 3, 4}), spec);
    ReplayBuffer buf(10);
    for (int i = 0; i < 11; ++i) {
        Transition t;
        t.state = s;
        t.next = s;
        t.action = i;  // tag each transition
        buf.push(std::move(t));
    }
    CHECK(buf.size() == 10);
    CHECK(buf.at(0).action == 1);  // element 0 evicted
    CHECK(buf.at(9).action == 10);
    CHECK_THROWS_AS(buf.at(10), std::out_of_range);
}

TEST_CASE("q network outputs live in (-1, 1)") {
    ProblemSpec spec = toy_spec(10);
    QNetwork net(10, 32, 17);
    rng::Stream s(19, 2);
    for (int trial = 0; trial < 200; ++trial) {
        EnvState st;
        st.mask.assign(10, 0.0);
        st.encoded.resize(10);
        for (double& v : st.encoded) v = s.next_unit();
        st.step = int(s.next_below(10));
        Eigen::VectorXd q = net.values(st);
        for (int i = 0; i < q.size(); ++i) {
            CHECK(q(i) > -1.0);
            CHECK(q(i) < 1.0);
        }
    }
}

TEST_CASE("td target: terminal equals reward exactly; bootstrap maxes unselected") {
    ProblemSpec spec = toy_spec(5);
    DqnAgent agent(spec, toy_agent_cfg(), 23);
    EnvState s = env_reset(field_of({5, 4, 3, 2, 1}), spec);
    Transition t;
    t.state = s;
    t.action = 0;
    t.reward = 0.8;
    t.next = env_step(s, 0, 5).first;
    t.terminal = true;
    CHECK(agent.td_target(t) == 0.8);

    t.terminal = false;
    Eigen::VectorXd q = agent.target().values(t.next);
    double best = -2.0;
    for (int a = 1; a < 5; ++a) best = std::max(best, q(a));
    CHECK(agent.td_target(t) == doctest::Approx(0.8 + 0.99 * best).epsilon(1e-12));
}

TEST_CASE("target network equals online right after a sync") {
    ProblemSpec spec = toy_spec(6);
    AgentConfig cfg = toy_agent_cfg();
    cfg.target_sync_interval = 3;
    DqnAgent agent(spec, cfg, 29);
    ReplayBuffer buf(64);
    rng::Stream s(29, 3);
    EnvState st = env_reset(field_of({1, 2, 3, 4, 5, 6}), spec);
    for (int i = 0; i < 16; ++i) {
        Transition t;
        t.state = st;
        t.action = int(s.next_below(6));
        t.reward = s.next_uniform(-1.0, 1.0);
        t.next = st;
        t.terminal = true;
        buf.push(std::move(t));
    }
    for (int u = 0; u < 3; ++u) CHECK(agent.train_step(buf).has_value());
    auto on = agent.online().param_views();
    auto tg = agent.target().param_views();
    for (std::size_t p = 0; p < on.size(); ++p)
        for (Eigen::Index i = 0; i < on[p].size(); ++i) CHECK(on[p](i) == tg[p](i));
    // one more update separates them again
    CHECK(agent.train_step(buf).has_value());
    bool differ = false;
    auto on2 = agent.online().param_views();
    auto tg2 = agent.target().param_views();
    for (std::size_t p = 0; p < on2.size() && !differ; ++p)
        for (Eigen::Index i = 0; i < on2[p].size() && !differ; ++i)
            differ = on2[p](i) != tg2[p](i);
    CHECK(differ);
}

TEST_CASE("train_step is a no-op signal while the buffer is below one batch") {
    ProblemSpec spec = toy_spec(5);
    DqnAgent agent(spec, toy_agent_cfg(), 31);
    ReplayBuffer buf(64);
    CHECK(!agent.train_step(buf).has_value());
}

TEST_CASE("analytic TD-loss gradient matches central finite differences on a 3-cell toy") {
    ProblemSpec spec = toy_spec(3);
    QNetwork net(3, 16, 37);
    const int B = 5;
    rng::Stream s(37, 4);
    Eigen::MatrixXd X(net.input_dim(), B);
    std::vector<int> actions(B);
    Eigen::VectorXd targets(B);
    for (int i = 0; i < B; ++i) {
        for (int j = 0; j < net.input_dim(); ++j) X(j, i) = s.next_unit();
        actions[static_cast<std::size_t>(i)] = int(s.next_below(3));
        targets(i) = s.next_uniform(-1.0, 1.0);
    }

    auto loss_of = [&](const QNetwork& n) {
        QForward f = q_forward(n, X);
        double loss = 0.0;
        for (int i = 0; i < B; ++i) {
            double diff = f.Out(actions[static_cast<std::size_t>(i)], i) - targets(i);
            loss += diff * diff;
        }
        return loss / double(B);
    };

    QForward fwd = q_forward(net, X);
    Eigen::MatrixXd dZ3 = Eigen::MatrixXd::Zero(3, B);
    for (int i = 0; i < B; ++i) {
        int a = actions[static_cast<std::size_t>(i)];
        double q = fwd.Out(a, i);
        dZ3(a, i) = 2.0 * (q - targets(i)) / double(B) * (1.0 - q * q);
    }
    QGrads g = q_backward(net, fwd, dZ3);

    const double h = 1e-6;
    double worst_rel = 0.0;
    auto probe = [&](Eigen::Map<Eigen::VectorXd> param, const Eigen::VectorXd& grad_flat) {
        for (Eigen::Index i = 0; i < param.size(); ++i) {
            double orig = param(i);
            param(i) = orig + h;
            double lp = loss_of(net);
            param(i) = orig - h;
            double lm = loss_of(net);
            param(i) = orig;
            double fd = (lp - lm) / (2.0 * h);
            double denom = std::max({std::abs(fd), std::abs(grad_flat(i)), 1e-6});
            worst_rel = std::max(worst_rel, std::abs(fd - grad_flat(i)) / denom);
        }
    };
    auto params = net.param_views();
    probe(params[0], Eigen::Map<Eigen::VectorXd>(g.W1.data(), g.W1.size()));
    probe(params[1], Eigen::Map<Eigen::VectorXd>(g.b1.data(), g.b1.size()));
    probe(params[2], Eigen::Map<Eigen::VectorXd>(g.W2.data(), g.W2.size()));
    probe(params[3], Eigen::Map<Eigen::VectorXd>(g.b2.data(), g.b2.size()));
    probe(params[4], Eigen::Map<Eigen::VectorXd>(g.W3.data(), g.W3.size()));
    probe(params[5], Eigen::Map<Eigen::VectorXd>(g.b3.data(), g.b3.size()));
    CHECK(worst_rel <= 1e-4);
}

TEST_CASE("oracle policy: steep jump attracts the first two selections") {
    ProblemSpec spec = toy_spec(40);
    std::vector<double> v(40, 0.0);
    for (int i = 20; i < 40; ++i) v[static_cast<std::size_t>(i)] = 1.0;  // jump between 19 and 20
    SelectionMask mask = oracle_policy(field_of(v), 10, spec);
    // brute-force scoring confirms cells 19 and 20 carry all the signal
    CHECK(mask.indices[0] >= 18);
    CHECK(mask.indices[0] <= 21);
    CHECK(mask.indices[1] >= 18);
    CHECK(mask.indices[1] <= 21);
}

TEST_CASE("oracle policy: constant field falls back to the uniform pattern") {
    ProblemSpec spec = toy_spec(17);
    SelectionMask oracle = oracle_policy(field_of(std::vector<double>(17, 2.5)), 5, spec);
    SelectionMask uniform = select_uniform(17, 5);
    CHECK(oracle.indices == uniform.indices);
}

TEST_CASE("oracle policy returns exactly B distinct indices") {
    ProblemSpec spec = toy_spec(33);
    rng::Stream s(41, 5);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<double> v(33);
        for (double& x : v) x = s.next_normal();
        int B = 1 + int(s.next_below(33));
        SelectionMask mask = oracle_policy(field_of(v), B, spec);
        CHECK(mask.size() == B);
        std::set<int> uniq(mask.indices.begin(), mask.indices.end());
        CHECK(static_cast<int>(uniq.size()) == B);
        mask.validate(33);
    }
}

TEST_CASE("baselines: uniform pattern, gradient ramp ties, budget discipline") {
    CHECK(select_uniform(5, 3).indices == std::vector<int>{0, 2, 4});
    CHECK(select_uniform(5, 5).indices == std::vector<int>{0, 1, 2, 3, 4});

    ProblemSpec spec = toy_spec(12);
    std::vector<double> ramp(12);
    // slope 0.25 keeps every difference exactly representable, so all scores
    // tie and the lowest-index rule decides
    for (int i = 0; i < 12; ++i) ramp[static_cast<std::size_t>(i)] = 0.25 * i;
    CHECK(select_gradient(field_of(ramp), 4, spec).indices == std::vector<int>{0, 1, 2, 3});

    std::vector<double> mag = {0, -9, 2, 7, -8, 1, 0, 3, -1, 5, 4, 6};
    auto intensity = select_intensity(field_of(mag), 3, spec);
    CHECK(intensity.indices == std::vector<int>{1, 4, 3});

    rng::Stream s(43, 6);
    for (int trial = 0; trial < 50; ++trial) {
        int B = 1 + int(s.next_below(12));
        auto rnd = select_random(12, B, s);
        std::set<int> uniq(rnd.indices.begin(), rnd.indices.end());
        CHECK(static_cast<int>(uniq.size()) == B);
        rnd.validate(12);
    }
}

TEST_CASE("variance baseline: posterior variance vanishes at selected cells as lambda -> 0") {
    ProblemSpec spec = toy_spec(16);
    rng::Stream s(47, 7);
    std::vector<double> v(16);
    for (double& x : v) x = s.next_normal();
    Field input = field_of(v);
    RidgeConfig proxy{1e-8, 1.0, 0.0};
    SelectionMask mask = select_variance(input, 5, spec, proxy);
    mask.validate(16);
    CHECK(mask.size() == 5);
    CHECK(mask.indices[0] == 0);  // all-ones prior variance ties to the lowest index

    // brute-force GP identity at each already-selected location
    for (int step = 1; step <= 5; ++step) {
        std::vector<int> selected(mask.indices.begin(), mask.indices.begin() + step);
        for (int cell : selected) {
            double var = gp_posterior_variance(input, selected, cell, spec, proxy);
            CHECK(std::abs(var) <= 1e-8);
        }
    }
    // and unselected cells keep strictly positive variance
    double v_open = gp_posterior_variance(input, {0, 7}, 12, spec, proxy);
    CHECK(v_open > 0.0);
}

TEST_CASE("demonstrations: count equals instances x budget and masks drive the env") {
    ProblemSpec spec = toy_spec(21);
    spec.burgers.grid_n = 21;
    Corpus corpus = build_corpus(spec, 6, 1, 3);
    auto demos = collect_demonstrations(corpus.train, 4, spec);
    CHECK(demos.size() == 6 * 4);
    for (const auto& d : demos) CHECK(d.state.mask[static_cast<std::size_t>(d.action)] == 0.0);
}

TEST_CASE("imitation pretraining reaches high agreement on a small demo set") {
    ProblemSpec spec = toy_spec(17);
    spec.burgers.grid_n = 17;
    Corpus corpus = build_corpus(spec, 20, 1, 9);
    AgentConfig cfg = toy_agent_cfg(64);
    cfg.pretrain_epochs = 60;
    cfg.pretrain_learning_rate = 3e-3;
    cfg.pretrain_batch = 32;
    DqnAgent agent(spec, cfg, 3);
    auto demos = collect_demonstrations(corpus.train, 5, spec);
    ImitationReport report = imitation_pretrain(agent, demos);
    CHECK(report.train_agreement >= 0.8);
    CHECK(report.holdout_agreement >= 0.3);
    // masking still holds at greedy inference
    EnvState s = env_reset(corpus.train[0].input, spec);
    s = env_step(s, 3, 5).first;
    CHECK(agent.select_action(s, 0.0) != 3);
}

TEST_CASE("monte-carlo backup distributes the discounted terminal reward") {
    // the harness assigns gamma^{B-1-t} * R when backup == monte_carlo; the
    // shape is asserted at the harness level, here we check the agent trains
    // on such terminal-tagged transitions
    ProblemSpec spec = toy_spec(5);
    AgentConfig cfg = toy_agent_cfg();
    cfg.backup = AgentConfig::Backup::monte_carlo;
    DqnAgent agent(spec, cfg, 53);
    EnvState s = env_reset(field_of({2, 4, 1, 5, 3}), spec);
    Transition t;
    t.state = s;
    t.action = 2;
    t.reward = 0.99 * 0.99 * 0.5;
    t.next = env_step(s, 2, 5).first;
    t.terminal = true;
    CHECK(agent.td_target(t) == doctest::Approx(0.99 * 0.99 * 0.5));
}

TEST_CASE("agents with the same seed behave identically") {
    ProblemSpec spec = toy_spec(9);
    DqnAgent a(spec, toy_agent_cfg(), 61);
    DqnAgent b(spec, toy_agent_cfg(), 61);
    EnvState s = env_reset(field_of({3, 1, 4, 1, 5, 9, 2, 6, 5}), spec);
    for (int i = 0; i < 50; ++i) {
        int ai = a.select_action(s, 0.35);
        int bi = b.select_action(s, 0.35);
        CHECK(ai == bi);
    }
}

TEST_CASE("agent checkpoints round-trip exactly") {
    ProblemSpec spec = toy_spec(7);
    AgentConfig cfg = toy_agent_cfg();
    DqnAgent agent(spec, cfg, 67);
    ReplayBuffer buf(64);
    EnvState s = env_reset(field_of({1, 2, 3, 4, 5, 6, 7}), spec);
    rng::Stream r(67, 9);
    for (int i = 0; i < 20; ++i) {
        Transition t;
        t.state = s;
        t.action = int(r.next_below(7));
        t.reward = r.next_uniform(-1.0, 1.0);
        t.next = s;
        t.terminal = (i % 3 == 0);
        buf.push(std::move(t));
    }
    for (int u = 0; u < 5; ++u) agent.train_step(buf);
    (void)agent.select_action_scheduled(s);

    auto path = (std::filesystem::temp_directory_path() / "rlmesh_agent_ckpt.bin").string();
    agent.save(path);
    DqnAgent back = DqnAgent::load(path, spec, cfg);
    CHECK(back.env_steps() == agent.env_steps());
    CHECK(back.updates() == agent.updates());
    // identical future behavior
    for (int i = 0; i < 10; ++i)
        CHECK(back.select_action(s, 0.5) == agent.select_action(s, 0.5));
    auto l1 = agent.train_step(buf);
    auto l2 = back.train_step(buf);
    REQUIRE(l1.has_value());
    REQUIRE(l2.has_value());
    CHECK(*l1 == *l2);
    std::filesystem::remove(path);
}
