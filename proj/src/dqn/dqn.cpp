#include "aeat/dqn/dqn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace aeat::dqn {

model::LayerMask ActionSpace::mask(std::size_t action) {
    if (action >= kSize) throw std::out_of_range("ActionSpace: action index out of range");
    return {static_cast<std::uint32_t>(action / kMasksPerStack + 1), static_cast<std::uint32_t>(action % kMasksPerStack + 1)};
}

std::size_t ActionSpace::index(const model::LayerMask& m) {
    if (m.enc == 0 || m.dec == 0 || m.enc > kMasksPerStack || m.dec > kMasksPerStack) {
        throw std::invalid_argument("ActionSpace: masks must be non-empty subsets of 4 layers");
    }
    return (m.enc - 1) * kMasksPerStack + (m.dec - 1);
}

void DqnConfig::validate() const {
    auto fail = [](const char* what) { throw std::invalid_argument(std::string("DqnConfig: ") + what); };
    if (state_dim != 5) fail("state_dim must be 5");
    if (!(gamma > 0.0 && gamma <= 1.0)) fail("gamma must be in (0, 1]");
    if (!(tau > 0.0 && tau <= 1.0)) fail("tau must be in (0, 1]");
    if (!(eps_min <= eps_init) || eps_min < 0.0 || eps_init > 1.0) fail("need 0 <= eps_min <= eps_init <= 1");
    if (!(eps_decay > 0.0 && eps_decay <= 1.0)) fail("eps_decay must be in (0, 1]");
    if (per_alpha < 0.0 || per_alpha > 1.0 || per_beta < 0.0 || per_beta > 1.0) fail("PER exponents must be in [0, 1]");
    if (replay_capacity == 0 || batch == 0 || hidden == 0 || blocks_per_episode == 0) fail("sizes must be positive");
    if (!(lr > 0.0) || lr_min < 0.0 || lr_min > lr) fail("need 0 <= lr_min <= lr");
    if (lambda_mse < 0.0 || lambda_layer < 0.0) fail("reward weights must be >= 0");
    if (snr_grid.empty()) fail("snr_grid must not be empty");
}

ParamStore q_layout(const DqnConfig& cfg) {
    ParamStore p;
    p.add("q.W1", Tensor(cfg.state_dim, cfg.hidden));
    p.add("q.b1", Tensor(1, cfg.hidden));
    p.add("q.W2", Tensor(cfg.hidden, cfg.hidden));
    p.add("q.b2", Tensor(1, cfg.hidden));
    p.add("q.W3", Tensor(cfg.hidden, ActionSpace::kSize));
    p.add("q.b3", Tensor(1, ActionSpace::kSize));
    return p;
}

ParamStore q_init(const DqnConfig& cfg, RngStream& rng) {
    ParamStore p = q_layout(cfg);
    for (auto& e : p.entries()) {
        if (e.value.rows == 1) continue;
        const double lim = std::sqrt(6.0 / static_cast<double>(e.value.rows + e.value.cols));
        for (auto& v : e.value.data) v = rng.uniform(-lim, lim);
    }
    return p;
}

ad::Var q_forward(ad::Tape& tape, ParamStore& q, const Tensor& states) {
    auto h = ad::relu(ad::add_row(ad::matmul(tape.constant(states), tape.param(q, "q.W1")), tape.param(q, "q.b1")));
    h = ad::relu(ad::add_row(ad::matmul(h, tape.param(q, "q.W2")), tape.param(q, "q.b2")));
    return ad::add_row(ad::matmul(h, tape.param(q, "q.W3")), tape.param(q, "q.b3"));
}

namespace {

std::vector<double> dense(std::span<const double> x, const Tensor& W, const Tensor& b, bool relu) {
    if (x.size() != W.rows) throw ShapeError("q_values: state width mismatch");
    std::vector<double> y(b.data);
    for (std::size_t k = 0; k < W.rows; ++k) {
        for (std::size_t j = 0; j < W.cols; ++j) y[j] += x[k] * W(k, j);
    }
    if (relu) {
        for (auto& v : y) v = std::max(v, 0.0);
    }
    return y;
}

}  // namespace

std::vector<double> q_values(const ParamStore& q, std::span<const double> state) {
    auto h = dense(state, q.at("q.W1"), q.at("q.b1"), true);
    h = dense(h, q.at("q.W2"), q.at("q.b2"), true);
    return dense(h, q.at("q.W3"), q.at("q.b3"), false);
}

std::size_t argmax(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("argmax: empty input");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

std::size_t select_action(const ParamStore& q, std::span<const double> state, double eps, RngStream& rng) {
    if (rng.uniform() < eps) return static_cast<std::size_t>(rng.below(ActionSpace::kSize));
    return argmax(q_values(q, state));
}

double reward(double mse, int active_layers, const DqnConfig& cfg) {
    return -(cfg.lambda_mse * mse + cfg.lambda_layer * active_layers);
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
    items_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(Transition t) {
    t.priority = max_priority_;
    if (items_.size() < capacity_) {
        items_.push_back(t);
    } else {
        items_[next_] = t;
    }
    next_ = (next_ + 1) % capacity_;
}

ReplayBuffer::Sample ReplayBuffer::sample(std::size_t n, double alpha, double beta, RngStream& rng) const {
    if (items_.empty()) throw std::logic_error("ReplayBuffer: cannot sample from an empty buffer");
    std::vector<double> cum(items_.size());
    double total = 0.0;
    double min_p = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < items_.size(); ++i) {
        const double p = std::pow(items_[i].priority, alpha);
        total += p;
        cum[i] = total;
        min_p = std::min(min_p, p);
    }
    const double N = static_cast<double>(items_.size());
    const double max_w = std::pow(N * min_p / total, -beta);
    Sample s;
    for (std::size_t k = 0; k < n; ++k) {
        const double u = rng.uniform() * total;
        std::size_t i = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
        i = std::min(i, items_.size() - 1);
        const double P = std::pow(items_[i].priority, alpha) / total;
        s.index.push_back(i);
        s.weight.push_back(std::min(1.0, std::pow(N * P, -beta) / max_w));
    }
    return s;
}

void ReplayBuffer::update_priority(std::size_t i, double abs_td) {
    const double p = std::fabs(abs_td) + 1e-3;
    items_.at(i).priority = p;
    max_priority_ = std::max(max_priority_, p);
}

Learner make_learner(const DqnConfig& cfg, RngStream& rng, std::uint64_t total_updates) {
    Learner l;
    l.online = q_init(cfg, rng);
    l.target = l.online;
    l.opt = AdamWState::zeros_like(l.online);
    l.total_updates = std::max<std::uint64_t>(1, total_updates);
    return l;
}

TdResult td_update(Learner& learner, std::span<const Transition> batch, std::span<const double> weights,
                   const DqnConfig& cfg) {
    if (batch.empty() || weights.size() != batch.size()) throw std::invalid_argument("td_update: bad batch");
    const std::size_t B = batch.size();
    Tensor states(B, cfg.state_dim);
    std::vector<std::size_t> actions(B);
    std::vector<double> y(B);
    for (std::size_t i = 0; i < B; ++i) {
        std::copy(batch[i].state.begin(), batch[i].state.end(), states.row(i).begin());
        actions[i] = batch[i].action;
        const auto next = q_values(learner.target, batch[i].next_state);
        y[i] = batch[i].reward + cfg.gamma * *std::max_element(next.begin(), next.end());
    }
    learner.online.zero_grad();
    ad::Tape tape;
    auto qa = ad::gather_cols(q_forward(tape, learner.online, states), actions);
    auto loss = ad::weighted_sq_error(qa, y, weights);
    tape.backward(loss);

    TdResult r;
    r.loss = loss.value().data[0];
    for (std::size_t i = 0; i < B; ++i) r.td.push_back(y[i] - qa.value().data[i]);
    const double lr = cosine_lr(std::min(learner.updates, learner.total_updates), learner.total_updates, cfg.lr,
                                cfg.lr_min);
    adamw_step(learner.online, learner.opt, lr, AdamWConfig{});
    ++learner.updates;
    return r;
}

void soft_update(const ParamStore& online, ParamStore& target, double tau) {
    if (online.size() != target.size()) throw ShapeError("soft_update: parameter sets differ");
    for (std::size_t i = 0; i < online.size(); ++i) {
        const auto& src = online.entries()[i].value;
        auto& dst = target.entries()[i].value;
        if (!src.same_shape(dst)) throw ShapeError("soft_update: parameter shapes differ");
        for (std::size_t j = 0; j < src.size(); ++j) dst.data[j] = tau * src.data[j] + (1.0 - tau) * dst.data[j];
    }
}

DqnResult train_dqn(model::AeModel& ae, const DqnConfig& cfg, const channel::ChannelModel& chan,
                    const channel::SnrReference& ref, const std::function<void(const EpisodeLog&)>& progress) {
    cfg.validate();
    if (ae.enc_layers() != 4 || ae.dec_layers() != 4) {
        throw std::invalid_argument("train_dqn: the action space assumes 4 layers per stack");
    }
    const RngStream master(cfg.seed);
    RngStream init_rng = master.derive(~0ull);
    const std::uint64_t total_updates = cfg.episodes > cfg.learn_start ? cfg.episodes - cfg.learn_start + 1 : 1;
    Learner learner = make_learner(cfg, init_rng, total_updates);
    ReplayBuffer buffer(cfg.replay_capacity);
    const train::EnvNormalizer norm{chan.settings().ranges};
    const auto& mcfg = ae.config();

    DqnResult result;
    double layer_sum = 0.0;
    for (std::size_t e = 0; e < cfg.episodes; ++e) {
        RngStream rng = master.derive(e);
        const double eps = std::max(cfg.eps_min, cfg.eps_init * std::pow(cfg.eps_decay, static_cast<double>(e)));
        const auto env = channel::sample_env(rng, chan.settings().ranges);
        Transition t;
        const auto s = norm(env);
        std::copy(s.begin(), s.end(), t.state.begin());
        t.action = select_action(learner.online, t.state, eps, rng);
        const double snr = cfg.snr_grid[rng.below(cfg.snr_grid.size())];

        train::Batch batch;
        std::vector<double> bits(mcfg.block_bits());
        for (std::size_t k = 0; k < cfg.blocks_per_episode; ++k) {
            for (auto& b : bits) b = static_cast<double>(rng.next_u64() >> 63);
            train::append_block_in(batch, bits, env, rng, mcfg, chan, ref, snr, norm);
        }
        const auto mask = ActionSpace::mask(t.action);
        ad::Tape tape;
        const auto f = model::forward_end_to_end(tape, ae, batch.bits, batch.states, mask, batch.link);
        t.reward = reward(f.mse, mask.active_layers(), cfg);
        const auto ns = norm(channel::sample_env(rng, chan.settings().ranges));
        std::copy(ns.begin(), ns.end(), t.next_state.begin());
        buffer.push(t);

        double loss = std::numeric_limits<double>::quiet_NaN();
        if (buffer.size() >= cfg.learn_start) {
            const auto smp = buffer.sample(cfg.batch, cfg.per_alpha, cfg.per_beta, rng);
            std::vector<Transition> mb;
            for (std::size_t i : smp.index) mb.push_back(buffer.at(i));
            const auto td = td_update(learner, mb, smp.weight, cfg);
            for (std::size_t k = 0; k < smp.index.size(); ++k) buffer.update_priority(smp.index[k], td.td[k]);
            soft_update(learner.online, learner.target, cfg.tau);
            loss = td.loss;
        }
        layer_sum += mask.active_layers();
        const EpisodeLog row{e, eps, t.reward, layer_sum / static_cast<double>(e + 1), loss};
        result.log.push_back(row);
        if (progress) progress(row);
    }
    result.q = std::move(learner.online);
    return result;
}

model::LayerMask DeploySelector::operator()(std::span<const double> state) {
    if (state.size() != cached_state_.size()) throw ShapeError("DeploySelector: state must have 5 components");
    if (has_cache_) {
        bool changed = false;
        for (std::size_t i = 0; i < state.size(); ++i) changed = changed || std::fabs(state[i] - cached_state_[i]) > threshold_;
        if (!changed) return cached_;
    }
    ++evaluations_;
    cached_ = ActionSpace::mask(argmax(q_values(q_, state)));
    std::copy(state.begin(), state.end(), cached_state_.begin());
    has_cache_ = true;
    return cached_;
}

eval::MaskPolicy deploy_policy(DeploySelector& sel) {
    return [&sel](std::span<const double> state, std::uint64_t block) {
        if (block == 0) sel.reset();
        return sel(state);
    };
}

}  // namespace aeat::dqn
