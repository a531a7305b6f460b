#include <cmath>
#include <map>
#include <set>

#include "aeat/dqn/dqn.hpp"
#include "aeat/train/train.hpp"
#include "doctest.h"
#include "param_fd.hpp"

using namespace aeat;
using namespace aeat::dqn;

namespace {

ParamStore set_b3(ParamStore q, const std::vector<double>& values) {
    for (auto& e : q.entries()) std::fill(e.value.data.begin(), e.value.data.end(), 0.0);
    q.at("q.b3").data = values;
    return q;
}

const channel::ChannelModel& chan() {
    static const channel::ChannelModel m;
    return m;
}

}  // namespace

TEST_CASE("action space") {
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    for (std::size_t a = 0; a < ActionSpace::kSize; ++a) {
        const auto m = ActionSpace::mask(a);
        CHECK(m.enc >= 1);
        CHECK(m.enc <= 15);
        CHECK(m.dec >= 1);
        CHECK(m.dec <= 15);
        CHECK(ActionSpace::index(m) == a);
        CHECK(m.active_layers() >= 2);
        CHECK(m.active_layers() <= 8);
        seen.insert({m.enc, m.dec});
    }
    CHECK(seen.size() == 225);
    CHECK(ActionSpace::mask(224) == model::LayerMask::full(4));
    CHECK_THROWS(ActionSpace::mask(225));
    CHECK_THROWS(ActionSpace::index({0, 3}));
}

TEST_CASE("q network shapes") {
    DqnConfig cfg;
    ParamStore zero = q_layout(cfg);
    const std::vector<double> s = {0.1, 0.2, 0.3, 0.4, 0.5};
    const auto v = q_values(zero, s);
    CHECK(v.size() == 225);
    for (double x : v) CHECK(x == 0.0);

    RngStream rng(1);
    ParamStore q = q_init(cfg, rng);
    Tensor states(2, 5);
    for (std::size_t i = 0; i < 5; ++i) {
        states(0, i) = s[i];
        states(1, i) = 1.0 - s[i];
    }
    ad::Tape tape;
    const auto out = q_forward(tape, q, states);
    CHECK(out.value().rows == 2);
    CHECK(out.value().cols == 225);
    const auto row1 = q_values(q, states.row(1));
    for (std::size_t j = 0; j < 225; ++j) CHECK(out.value()(1, j) == doctest::Approx(row1[j]).epsilon(1e-12));
}

TEST_CASE("action selection") {
    DqnConfig cfg;
    const std::vector<double> s(5, 0.5);
    std::vector<double> vals(225, 0.0);
    vals[7] = 1.0;
    RngStream rng(2);
    CHECK(select_action(set_b3(q_layout(cfg), vals), s, 0.0, rng) == 7);

    std::vector<double> tie(225, -1.0);
    tie[3] = tie[9] = 2.0;
    CHECK(select_action(set_b3(q_layout(cfg), tie), s, 0.0, rng) == 3);
    CHECK(argmax(tie) == 3);

    // Greedy choice is unchanged by a constant shift of every value.
    RngStream init(4);
    ParamStore q = q_init(cfg, init);
    const std::size_t a0 = argmax(q_values(q, s));
    for (auto& b : q.at("q.b3").data) b += 3.5;
    CHECK(argmax(q_values(q, s)) == a0);

    const int n = 1000000;
    std::vector<int> counts(225, 0);
    const ParamStore qv = set_b3(q_layout(cfg), vals);
    RngStream r2(9);
    for (int i = 0; i < n; ++i) ++counts[select_action(qv, s, 1.0, r2)];
    const double p = 1.0 / 225.0;
    const double sd = std::sqrt(n * p * (1 - p));
    int outside = 0;
    for (int c : counts) outside += std::fabs(c - n * p) > 3.0 * sd;
    // Each count is outside 3 sd with probability 0.0027.
    CHECK(outside <= 4);
}

TEST_CASE("reward") {
    DqnConfig cfg;
    CHECK(reward(0.0, 0, cfg) == 0.0);
    CHECK(reward(0.02, 5, cfg) == doctest::Approx(-0.045).epsilon(1e-12));
    for (int l = 2; l < 8; ++l) CHECK(reward(0.1, l + 1, cfg) < reward(0.1, l, cfg));
}

TEST_CASE("replay buffer ring") {
    ReplayBuffer buf(3);
    for (int i = 0; i < 5; ++i) {
        Transition t;
        t.action = std::size_t(i);
        buf.push(t);
        CHECK(buf.size() <= 3);
    }
    std::set<std::size_t> acts;
    for (std::size_t i = 0; i < buf.size(); ++i) acts.insert(buf.at(i).action);
    CHECK(acts == std::set<std::size_t>{2, 3, 4});

    ReplayBuffer empty(4);
    RngStream rng(1);
    CHECK_THROWS(empty.sample(1, 0.6, 0.4, rng));
}

TEST_CASE("prioritised sampling") {
    RngStream rng(5);
    ReplayBuffer buf(2000);
    for (int i = 0; i < 1001; ++i) buf.push({});
    for (std::size_t i = 0; i < buf.size(); ++i) CHECK(buf.at(i).priority > 0.0);

    // Equal priorities: uniform and unit weights.
    auto s = buf.sample(200000, 0.6, 0.4, rng);
    std::vector<int> counts(buf.size(), 0);
    for (std::size_t i : s.index) ++counts[i];
    for (double w : s.weight) CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
    const double p = 1.0 / 1001.0;
    double chi2 = 0.0;
    for (int c : counts) chi2 += (c - 200000 * p) * (c - 200000 * p) / (200000 * p);
    // 1000 degrees of freedom: mean 1000, sd about 45.
    CHECK(chi2 < 1000 + 5 * 45);

    // One heavy item among unit priorities (update adds 1e-3).
    for (std::size_t i = 0; i < buf.size(); ++i) buf.update_priority(i, 1.0 - 1e-3);
    buf.update_priority(500, 1e6 - 1e-3);
    s = buf.sample(100000, 1.0, 0.4, rng);
    int heavy = 0;
    for (std::size_t i : s.index) heavy += i == 500;
    CHECK(heavy > 99000);
    for (double w : s.weight) {
        CHECK(w > 0.0);
        CHECK(w <= 1.0);
    }

    // alpha = 0 ignores priorities.
    s = buf.sample(100000, 0.0, 0.4, rng);
    heavy = 0;
    for (std::size_t i : s.index) heavy += i == 500;
    CHECK(std::fabs(heavy - 100000 * p) < 4.0 * std::sqrt(100000 * p));
    for (double w : s.weight) CHECK(w == doctest::Approx(1.0).epsilon(1e-12));

    // A newly pushed transition gets the largest priority seen.
    buf.push({});
    CHECK(buf.at(buf.size() - 1).priority == doctest::Approx(1e6));
}

TEST_CASE("td targets") {
    DqnConfig cfg;
    cfg.hidden = 8;
    RngStream rng(6);
    Learner l = make_learner(cfg, rng, 10);
    // Target values are 0.5 except action 17, the max at 1.0.
    std::vector<double> ones(225, 0.5);
    ones[17] = 1.0;
    l.target = set_b3(q_layout(cfg), ones);
    l.online = set_b3(q_layout(cfg), std::vector<double>(225, 0.0));
    l.opt = AdamWState::zeros_like(l.online);

    Transition t;
    t.action = 4;
    t.reward = -0.07;
    const std::vector<Transition> batch = {t};
    const std::vector<double> w = {1.0};
    auto r = td_update(l, batch, w, cfg);
    CHECK(r.td[0] == doctest::Approx(0.92).epsilon(1e-12));
    CHECK(r.loss == doctest::Approx(0.92 * 0.92).epsilon(1e-12));
    CHECK(l.updates == 1);

    cfg.gamma = 0.0;
    l.online = set_b3(q_layout(cfg), std::vector<double>(225, 0.0));
    l.opt = AdamWState::zeros_like(l.online);
    r = td_update(l, batch, w, cfg);
    CHECK(r.td[0] == doctest::Approx(-0.07).epsilon(1e-12));

    // Online already at the target: zero loss.
    DqnConfig c0;
    c0.hidden = 8;
    c0.gamma = 0.5;
    std::vector<double> q0(225, 0.0);
    q0[4] = -0.07 + 0.5 * 1.0;
    l.online = set_b3(q_layout(c0), q0);
    l.opt = AdamWState::zeros_like(l.online);
    r = td_update(l, batch, w, c0);
    CHECK(r.loss == 0.0);
}

TEST_CASE("td loss gradient") {
    DqnConfig cfg;
    cfg.hidden = 8;
    RngStream rng(7);
    ParamStore q = q_init(cfg, rng);
    for (auto& e : q.entries()) {
        for (auto& v : e.value.data) v += 0.05 * rng.normal();
    }
    Tensor states(6, 5);
    for (auto& v : states.data) v = rng.uniform();
    const std::vector<std::size_t> actions = {0, 17, 224, 100, 17, 3};
    const std::vector<double> y = {-0.3, 0.1, 0.4, -0.2, 0.0, 0.25};
    const std::vector<double> w = {1.0, 0.5, 0.25, 0.9, 0.7, 1.0};
    const double err = testing::max_param_fd_rel_error(q, [&](ad::Tape& tape) {
        return ad::weighted_sq_error(ad::gather_cols(q_forward(tape, q, states), actions), y, w);
    });
    CHECK(err < 1e-4);
}

TEST_CASE("soft update") {
    DqnConfig cfg;
    cfg.hidden = 4;
    RngStream rng(8);
    const ParamStore a = q_init(cfg, rng);
    const ParamStore b = q_init(cfg, rng);

    ParamStore t = b;
    soft_update(a, t, 1.0);
    CHECK(t.flatten() == a.flatten());
    t = b;
    soft_update(a, t, 0.0);
    CHECK(t.flatten() == b.flatten());
    t = a;
    soft_update(a, t, 0.3);
    const auto fa = a.flatten(), ft = t.flatten();
    for (std::size_t i = 0; i < fa.size(); ++i) CHECK(ft[i] == doctest::Approx(fa[i]).epsilon(1e-15));
    t = b;
    soft_update(a, t, 0.25);
    const auto fb = b.flatten(), f2 = t.flatten();
    for (std::size_t i = 0; i < fa.size(); ++i) CHECK(f2[i] == doctest::Approx(0.25 * fa[i] + 0.75 * fb[i]));
}

TEST_CASE("fixed state converges to the best action") {
    DqnConfig cfg;
    cfg.lambda_layer = 0.0;
    cfg.gamma = 0.99;
    cfg.lr = 3e-3;
    const std::size_t best = 137;
    auto oracle = [&](std::size_t a) {
        const double d = (double(a) - double(best)) / 225.0;
        return -d * d - (a == best ? 0.0 : 0.01);
    };
    RngStream rng(10);
    const std::size_t updates = 1500;
    Learner l = make_learner(cfg, rng, updates);
    ReplayBuffer buf(5000);
    const std::array<double, 5> s = {0.2, 0.4, 0.6, 0.8, 0.3};
    for (int i = 0; i < 2000; ++i) {
        Transition t;
        t.state = s;
        t.next_state = s;
        t.action = select_action(l.online, s, 1.0, rng);
        t.reward = oracle(t.action);
        buf.push(t);
    }
    // Episode length 1: no bootstrap term.
    DqnConfig step = cfg;
    step.gamma = 0.0;
    for (std::size_t u = 0; u < updates; ++u) {
        const auto smp = buf.sample(64, 0.0, 0.0, rng);
        std::vector<Transition> mb;
        for (std::size_t i : smp.index) mb.push_back(buf.at(i));
        td_update(l, mb, smp.weight, step);
    }
    CHECK(argmax(q_values(l.online, s)) == best);
}

TEST_CASE("deployment cache") {
    DqnConfig cfg;
    cfg.hidden = 16;
    RngStream rng(11);
    const ParamStore q = q_init(cfg, rng);
    DeploySelector sel(q, 0.1);
    const std::vector<double> s = {0.5, 0.5, 0.5, 0.5, 0.5};
    const auto m1 = sel(s);
    const auto m2 = sel(s);
    CHECK(m1 == m2);
    CHECK(sel.evaluations() == 1);
    CHECK(m1 == ActionSpace::mask(argmax(q_values(q, s))));

    auto near = s;
    near[2] += 0.05;
    CHECK(sel(near) == m1);
    CHECK(sel.evaluations() == 1);

    auto far = s;
    far[2] += 0.2;
    const auto m3 = sel(far);
    CHECK(sel.evaluations() == 2);
    CHECK(m3 == ActionSpace::mask(argmax(q_values(q, far))));

    sel.reset();
    sel(far);
    CHECK(sel.evaluations() == 3);
}

TEST_CASE("smoke training run") {
    model::ModelConfig mc;
    mc.T = 4;
    mc.d = 8;
    mc.heads = 2;
    mc.layers = 4;
    mc.d_in = 4;
    RngStream init(1);
    auto ae = model::AeModel::init(mc, init);
    const auto ref = channel::calibrate_snr(chan(), 1, 20000);
    train::TrainConfig tc;
    tc.epochs = 1;
    tc.steps_per_epoch = 150;
    tc.lr = 1e-2;
    tc.seed = 3;
    train::train_ae(ae, tc, chan(), ref);

    DqnConfig cfg;
    cfg.episodes = 500;
    cfg.seed = 4;
    std::size_t calls = 0;
    const auto res = train_dqn(ae, cfg, chan(), ref, [&](const EpisodeLog&) { ++calls; });
    REQUIRE(res.log.size() == 500);
    CHECK(calls == 500);
    CHECK(res.log.back().epsilon == doctest::Approx(std::max(0.01, std::pow(0.995, 499))));
    CHECK(std::isnan(res.log[126].loss));
    CHECK(std::isfinite(res.log[127].loss));
    double first = 0.0, last = 0.0;
    for (std::size_t i = 0; i < 50; ++i) {
        first += res.log[i].reward;
        last += res.log[450 + i].reward;
    }
    MESSAGE("mean reward first 10%: " << first / 50 << ", last 10%: " << last / 50);
    CHECK(last > first);

    const auto again = train_dqn(ae, cfg, chan(), ref);
    CHECK(again.q.flatten() == res.q.flatten());

    model::ModelConfig small = mc;
    small.layers = 2;
    RngStream i2(1);
    auto ae2 = model::AeModel::init(small, i2);
    CHECK_THROWS(train_dqn(ae2, cfg, chan(), ref));
}
