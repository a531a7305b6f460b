#pragma once

// Deep Q-learning controller that picks transformer layer masks from the
// normalised environment state.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "aeat/eval/ber.hpp"
#include "aeat/numerics/autodiff.hpp"
#include "aeat/numerics/optim.hpp"

namespace aeat::dqn {

// Action a <-> (enc, dec) masks over 4-layer stacks, both non-empty:
//   enc = a / 15 + 1, dec = a % 15 + 1, a in [0, 225).
// Bit l of a mask activates layer l.
struct ActionSpace {
    static constexpr std::size_t kMasksPerStack = 15;
    static constexpr std::size_t kSize = kMasksPerStack * kMasksPerStack;
    static model::LayerMask mask(std::size_t action);
    static std::size_t index(const model::LayerMask& mask);
    static int layers(std::size_t action) { return mask(action).active_layers(); }
};

struct DqnConfig {
    std::size_t state_dim = 5;
    std::size_t hidden = 128;
    double lr = 3e-4;
    double lr_min = 0.0;
    double gamma = 0.99;
    double tau = 1e-3;
    double eps_init = 1.0;
    double eps_min = 0.01;
    double eps_decay = 0.995;
    std::size_t replay_capacity = 100000;
    std::size_t batch = 128;
    std::size_t learn_start = 128;  // transitions stored before the first update
    double per_alpha = 0.6;
    double per_beta = 0.4;
    double lambda_mse = 1.0;
    double lambda_layer = 0.005;
    std::size_t episodes = 3000;
    std::size_t blocks_per_episode = 8;  // MSE averaged over this many blocks
    std::vector<double> snr_grid = {0, 2, 4, 6, 8, 10};
    double change_threshold = 0.1;
    std::uint64_t seed = 1;

    void validate() const;
};

// Q-network 5 -> 128 -> 128 -> 225 with ReLU.
ParamStore q_layout(const DqnConfig& cfg);
ParamStore q_init(const DqnConfig& cfg, RngStream& rng);
ad::Var q_forward(ad::Tape& tape, ParamStore& q, const Tensor& states);
// Plain evaluation for one state.
std::vector<double> q_values(const ParamStore& q, std::span<const double> state);

// Lowest index wins ties.
std::size_t argmax(std::span<const double> values);
std::size_t select_action(const ParamStore& q, std::span<const double> state, double eps, RngStream& rng);

double reward(double mse, int active_layers, const DqnConfig& cfg);

struct Transition {
    std::array<double, 5> state{};
    std::size_t action = 0;
    double reward = 0.0;
    std::array<double, 5> next_state{};
    double priority = 1.0;
};

// Fixed-capacity ring; the oldest transition is overwritten first.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    // Stored with the largest priority seen so far.
    void push(Transition t);
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& at(std::size_t i) const { return items_[i]; }

    struct Sample {
        std::vector<std::size_t> index;
        std::vector<double> weight;  // (N P(i))^-beta / max, in (0, 1]
    };
    // P(i) proportional to priority^alpha, drawn with replacement.
    Sample sample(std::size_t n, double alpha, double beta, RngStream& rng) const;
    void update_priority(std::size_t i, double abs_td);

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    double max_priority_ = 1.0;
    std::vector<Transition> items_;
};

struct Learner {
    ParamStore online;
    ParamStore target;
    AdamWState opt;
    std::uint64_t updates = 0;
    std::uint64_t total_updates = 1;  // cosine horizon
};

Learner make_learner(const DqnConfig& cfg, RngStream& rng, std::uint64_t total_updates);

struct TdResult {
    double loss = 0.0;
    std::vector<double> td;  // y_i - Q(s_i, a_i)
};

// Importance-weighted TD regression step on the online network.
TdResult td_update(Learner& learner, std::span<const Transition> batch, std::span<const double> weights,
                   const DqnConfig& cfg);
// target <- tau * online + (1 - tau) * target
void soft_update(const ParamStore& online, ParamStore& target, double tau);

struct EpisodeLog {
    std::size_t episode;
    double epsilon;
    double reward;
    double avg_layers;  // running mean over episodes so far
    double loss;        // NaN before learning starts
};

struct DqnResult {
    ParamStore q;
    std::vector<EpisodeLog> log;
};

// The autoencoder stays frozen. Episode e uses RngStream(seed).derive(e) for
// its environment, SNR, exploration and channel blocks.
DqnResult train_dqn(model::AeModel& ae, const DqnConfig& cfg, const channel::ChannelModel& chan,
                    const channel::SnrReference& ref, const std::function<void(const EpisodeLog&)>& progress = {});

// Greedy selection with change detection: the cached mask is reused until a
// state component moves by more than the threshold from the state that
// produced it.
class DeploySelector {
public:
    DeploySelector(const ParamStore& q, double threshold) : q_(q), threshold_(threshold) {}
    model::LayerMask operator()(std::span<const double> state);
    std::size_t evaluations() const { return evaluations_; }
    void reset() { has_cache_ = false; }

private:
    const ParamStore& q_;
    double threshold_;
    bool has_cache_ = false;
    std::array<double, 5> cached_state_{};
    model::LayerMask cached_{};
    std::size_t evaluations_ = 0;
};

// Evaluation policy backed by sel; the cache is cleared whenever block 0
// comes round again, so every SNR point starts from the same state.
eval::MaskPolicy deploy_policy(DeploySelector& sel);

}  // namespace aeat::dqn
