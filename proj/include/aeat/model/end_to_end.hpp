#pragma once

// Encoder -> block-fading channel -> decoder.
//
// The receiver scales y by 1/(amplitude*E[h]), so the decoder sees
//   y' = (h/E[h]) * x + w / (amplitude*E[h]).
// A Link holds those per-block gains and the already-scaled noise.

#include <span>
#include <vector>

#include "aeat/channel/channel.hpp"
#include "aeat/model/model.hpp"

namespace aeat::model {

struct Link {
    std::vector<double> gain;  // one per block
    Tensor noise;              // (B*T) x d_in
    bool hard_transmit = false;  // threshold intensities at 0.5 before the channel

    std::size_t blocks() const { return gain.size(); }
};

// Appends one block with fading coefficient h; noise drawn from rng.
void append_block(Link& link, double h, const channel::SnrReference& ref, double snr_db, const ModelConfig& cfg,
                  RngStream& rng);
Link noiseless_link(std::size_t blocks, const ModelConfig& cfg);

struct Forward {
    ad::Var probs;   // (B*T) x d_in
    ad::Var bce;     // 1 x 1
    std::vector<double> block_mse;  // mean squared error between bits and probs, per block
    double mse = 0.0;
};

// bits: B x N; env_states: B x env_dim, normalised.
Forward forward_end_to_end(ad::Tape& tape, AeModel& model, const Tensor& bits, const Tensor& env_states,
                           const LayerMask& mask, const Link& link);

}  // namespace aeat::model
