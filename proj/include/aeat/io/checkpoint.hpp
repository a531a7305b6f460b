#pragma once

// Binary parameter checkpoints.
//
// Layout (all integers little-endian):
//   "AEAT1"                      5 bytes
//   u32 version (1), u32 kind
//   u32 T, d, heads, layers, d_in, env_dim, ffn_mult, enc_layers, dec_layers
//   u8  positional, u8 env_conditioning
//   u64 config hash, u64 seed
//   u32 tensor count, then per tensor:
//       u16 name length, name bytes, u32 rows, u32 cols, u64 payload byte offset
//   u64 payload bytes
//   payload: IEEE-754 binary32, row-major, manifest order
//   u64 FNV-1a 64 of the payload

#include <cstdint>
#include <stdexcept>
#include <string>

#include "aeat/model/model.hpp"

namespace aeat::io {

enum class CheckpointKind : std::uint32_t { autoencoder = 1, q_network = 2 };

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Checkpoint {
    CheckpointKind kind = CheckpointKind::autoencoder;
    model::ModelConfig model;  // framing of the autoencoder (also recorded for Q-networks)
    std::uint32_t enc_layers = 0;
    std::uint32_t dec_layers = 0;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    ParamStore params;  // values rounded to binary32
};

std::string encode_checkpoint(const Checkpoint& ck);
Checkpoint decode_checkpoint(const std::string& bytes);
void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Rebuilds the autoencoder held in an autoencoder checkpoint.
model::AeModel to_model(const Checkpoint& ck);

}  // namespace aeat::io
