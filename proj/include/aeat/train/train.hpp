#pragma once

// Full-depth autoencoder training over randomised environments at a fixed SNR.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "aeat/channel/channel.hpp"
#include "aeat/model/end_to_end.hpp"
#include "aeat/numerics/optim.hpp"

namespace aeat::train {

// Min-max scaling over the sampling ranges; Cn2 is scaled in the log domain
// over [4e-15, 5e-14]. Out-of-range values are clamped and counted.
struct EnvNormalizer {
    channel::EnvRanges ranges;
    double Cn2_min = 4e-15;
    double Cn2_max = 5e-14;

    std::array<double, 5> operator()(const channel::EnvParams& env, bool* clamped = nullptr) const;
};

struct TrainConfig {
    std::size_t batch_size = 64;
    std::size_t epochs = 50;
    std::size_t steps_per_epoch = 200;
    double lr = 1e-3;
    double lr_min = 0.0;
    double train_snr_db = 10.0;
    double lambda_bce = 1.0;
    double weight_decay = 1e-5;
    // Gradient partitions per batch; fixed so results do not depend on the
    // number of worker threads.
    std::size_t grad_chunks = 4;
    bool noiseless = false;  // h = 1, no noise
    std::uint64_t seed = 1;

    std::size_t total_steps() const { return epochs * steps_per_epoch; }
    void validate() const;
};

struct Batch {
    Tensor bits;    // B x N
    Tensor states;  // B x 5, normalised
    std::vector<channel::EnvParams> envs;
    std::vector<channel::ChannelDraw> draws;
    model::Link link;
};

// Appends a block carrying the given bits; environment, channel draw and
// receiver noise come from rng in that order.
void append_block(Batch& batch, std::span<const double> bits, RngStream& rng, const model::ModelConfig& mcfg,
                  const channel::ChannelModel& chan, const channel::SnrReference& ref, double snr_db,
                  const EnvNormalizer& norm, bool noiseless = false);

// As append_block, with the environment fixed by the caller.
void append_block_in(Batch& batch, std::span<const double> bits, const channel::EnvParams& env, RngStream& rng,
                     const model::ModelConfig& mcfg, const channel::ChannelModel& chan,
                     const channel::SnrReference& ref, double snr_db, const EnvNormalizer& norm,
                     bool noiseless = false);

// Draws uniform bits from rng, then as append_block.
void append_random_block(Batch& batch, RngStream& rng, const model::ModelConfig& mcfg,
                         const channel::ChannelModel& chan, const channel::SnrReference& ref, double snr_db,
                         const EnvNormalizer& norm, bool noiseless = false);

// Block b of step s uses RngStream(seed).derive(s).derive(b).
Batch make_batch(std::uint64_t seed, std::uint64_t step, std::size_t batch_size, const model::ModelConfig& mcfg,
                 const channel::ChannelModel& chan, const channel::SnrReference& ref, double snr_db,
                 const EnvNormalizer& norm, bool noiseless = false);

Batch slice_batch(const Batch& b, std::size_t begin, std::size_t count, const model::ModelConfig& mcfg);
// Blocks idx[0], idx[1], ... of b, in that order.
Batch gather_blocks(const Batch& b, std::span<const std::size_t> idx, const model::ModelConfig& mcfg);

struct TrainingDiverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Mean BCE of the batch with gradients left in model.params(). The parallel
// version evaluates fixed chunks on per-chunk replicas and sums their
// gradients in chunk order; the serial version runs the batch on one tape.
double batch_gradient(model::AeModel& model, const Batch& batch, const model::LayerMask& mask, double lambda_bce,
                      std::size_t chunks, std::vector<model::AeModel>& replicas);
double batch_gradient_serial(model::AeModel& model, const Batch& batch, const model::LayerMask& mask,
                             double lambda_bce);

struct LogRow {
    std::size_t epoch;
    std::size_t step;
    double bce;
    double lr;
};

struct TrainResult {
    std::vector<LogRow> log;
    double initial_bce = 0.0;
    double final_bce = 0.0;
};

using ProgressFn = std::function<void(const LogRow&)>;

// Trains in place at full depth. Throws TrainingDiverged on a non-finite loss.
TrainResult train_ae(model::AeModel& model, const TrainConfig& cfg, const channel::ChannelModel& chan,
                     const channel::SnrReference& ref, const ProgressFn& progress = {});

}  // namespace aeat::train
