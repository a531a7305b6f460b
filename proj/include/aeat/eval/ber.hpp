#pragma once

// Monte Carlo bit-error-rate harness.
//
// Block i of an evaluation draws its bits, environment, channel and noise
// from RngStream(seed).derive(i), so every SNR point and every codec sees the
// same blocks; only the noise scale changes with SNR.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "aeat/train/train.hpp"

namespace aeat::eval {

// Maps a received batch of blocks (all using one layer mask) to bit
// probabilities, B x N.
class BlockCodec {
public:
    virtual ~BlockCodec() = default;
    virtual Tensor decide(const train::Batch& blocks, const model::LayerMask& mask) const = 0;
    virtual model::ModelConfig framing() const = 0;
};

class AeCodec : public BlockCodec {
public:
    explicit AeCodec(model::AeModel& model) : model_(model) {}
    Tensor decide(const train::Batch& blocks, const model::LayerMask& mask) const override;
    model::ModelConfig framing() const override { return model_.config(); }

private:
    model::AeModel& model_;
};

// Uncoded on-off keying: the intensity is the bit itself and the decision
// statistic is the normalised received sample.
class OokCodec : public BlockCodec {
public:
    explicit OokCodec(const model::ModelConfig& framing) : framing_(framing) {}
    Tensor decide(const train::Batch& blocks, const model::LayerMask& mask) const override;
    model::ModelConfig framing() const override { return framing_; }

private:
    model::ModelConfig framing_;
};

// Ignores the transmitted bits: decides from the sign of the noise sample.
class GuessCodec : public OokCodec {
public:
    using OokCodec::OokCodec;
    Tensor decide(const train::Batch& blocks, const model::LayerMask& mask) const override;
};

// Layer mask for a normalised environment state. Called serially in block
// order, with block restarting at 0 for every SNR point, so stateful
// (caching) policies stay deterministic.
using MaskPolicy = std::function<model::LayerMask(std::span<const double> state, std::uint64_t block)>;

struct EvalConfig {
    std::vector<double> snr_grid = {0, 2, 4, 6, 8, 10};
    std::uint64_t n_bits = 200000;  // rounded up to whole blocks
    std::uint64_t seed = 1;
    std::size_t group_blocks = 64;  // blocks per forward pass and per parallel task
    bool noiseless = false;
    bool hard_transmit = false;
};

struct SnrRecord {
    double snr_db = 0.0;
    std::uint64_t bits = 0;
    std::uint64_t errors = 0;
    double ber = 0.0;
    double avg_active_layers = 0.0;
    double mean_mse = 0.0;
    double amplitude = 0.0;
    double wall_time_s = 0.0;
};

struct EvalReport {
    std::vector<SnrRecord> records;
    double mean_h = 0.0;
    double sigma_w = 0.0;
    std::uint64_t seed = 0;
};

// policy may be empty (full depth).
EvalReport ber_curve(const BlockCodec& codec, const MaskPolicy& policy, const channel::ChannelModel& chan,
                     const channel::SnrReference& ref, const EvalConfig& cfg);

struct TimingResult {
    double seconds = 0.0;
    std::uint64_t bits = 0;
    double avg_active_layers = 0.0;
};

// Wall-clock time of one pass over n_bits at snr_db, after an untimed
// warm-up pass over the same blocks.
TimingResult time_inference(const BlockCodec& codec, const MaskPolicy& policy, const channel::ChannelModel& chan,
                            const channel::SnrReference& ref, std::uint64_t n_bits, double snr_db,
                            std::uint64_t seed);

}  // namespace aeat::eval
