#pragma once

// Environment-conditioned transformer autoencoder.
//
// Activations are batched: a batch of B blocks is carried as (B*T) x width
// matrices, block b occupying rows [b*T, (b+1)*T). A block of N = T*d_in bits
// has the same row-major layout as its T x d_in token matrix, so B x N bit
// tensors are reinterpreted rather than copied.

#include <cstdint>
#include <string>
#include <vector>

#include "aeat/numerics/autodiff.hpp"
#include "aeat/numerics/rng.hpp"
#include "aeat/numerics/tensor.hpp"

namespace aeat::model {

struct ModelConfig {
    std::size_t T = 16;         // tokens per block
    std::size_t d = 32;         // embedding width
    std::size_t heads = 4;
    std::size_t layers = 4;     // per stack
    std::size_t d_in = 8;       // bits per token
    std::size_t env_dim = 5;
    std::size_t ffn_mult = 4;
    bool positional = true;     // learned T x d table on encoder and decoder inputs
    bool env_conditioning = true;  // false: the environment token is all zeros

    std::size_t block_bits() const { return T * d_in; }
    std::size_t symbols() const { return T * d_in; }
    std::size_t head_dim() const { return d / heads; }
    void validate() const;
};

// Active transformer layers per stack; bit l selects layer l.
struct LayerMask {
    std::uint32_t enc = 0;
    std::uint32_t dec = 0;

    static LayerMask full(std::size_t layers);
    int active_layers() const;
    bool operator==(const LayerMask&) const = default;
};

class AeModel {
public:
    AeModel(const ModelConfig& cfg, std::size_t enc_layers, std::size_t dec_layers, ParamStore params);

    // Glorot-uniform weights, zero biases, unit layer-norm gains.
    static AeModel init(const ModelConfig& cfg, RngStream& rng);

    const ModelConfig& config() const { return cfg_; }
    std::size_t enc_layers() const { return enc_layers_; }
    std::size_t dec_layers() const { return dec_layers_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    void check_mask(const LayerMask& mask) const;

    // Network holding only the layers active in mask, renumbered densely;
    // running it at full depth reproduces the masked forward pass.
    AeModel rebuild_active(const LayerMask& mask) const;

    // Parameter store for an architecture; values are zero.
    static ParamStore layout(const ModelConfig& cfg, std::size_t enc_layers, std::size_t dec_layers);

private:
    ModelConfig cfg_;
    std::size_t enc_layers_;
    std::size_t dec_layers_;
    ParamStore params_;
};

std::string layer_prefix(const char* stack, std::size_t layer);

// Forward building blocks. `model` must outlive the tape.
ad::Var embed_signal(ad::Tape& tape, AeModel& model, const Tensor& bit_tokens);
ad::Var embed_env(ad::Tape& tape, AeModel& model, const Tensor& states);
ad::Var self_attention(ad::Tape& tape, AeModel& model, const std::string& prefix, ad::Var input,
                       Tensor* weights_out = nullptr);
ad::Var cross_attention(ad::Tape& tape, AeModel& model, const std::string& prefix, ad::Var queries,
                        ad::Var env_tokens, Tensor* weights_out = nullptr);
ad::Var transformer_layer(ad::Tape& tape, AeModel& model, const std::string& prefix, ad::Var input,
                          ad::Var env_tokens);

// bits: B x N in {0,1}; returns (B*T) x d_in intensities in (0,1).
ad::Var encode(ad::Tape& tape, AeModel& model, const Tensor& bits, ad::Var env_tokens, std::uint32_t enc_mask);
// received: (B*T) x d_in, already normalised; returns bit probabilities.
ad::Var decode(ad::Tape& tape, AeModel& model, ad::Var received, ad::Var env_tokens, std::uint32_t dec_mask);

// View a B x N bit matrix as (B*T) x d_in tokens.
Tensor as_tokens(const Tensor& bits, const ModelConfig& cfg);

}  // namespace aeat::model
