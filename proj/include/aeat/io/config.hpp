#pragma once

// Experiment configuration file.
//
//   # comment
//   [dqn]
//   gamma = 0.99
//   snr_grid = 0, 2, 4
//   model.layers = 4        # dotted keys work anywhere
//
// Sections: channel, model, train_ae, dqn, eval. Missing keys keep their
// defaults; unknown keys and out-of-range values are errors naming the key.

#include <cstdint>
#include <stdexcept>
#include <string>

#include "aeat/dqn/dqn.hpp"

namespace aeat::io {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EvalSettings {
    std::vector<double> snr_grid = {0, 2, 4, 6, 8, 10};
    std::size_t n_bits = 200000;
    std::size_t group_blocks = 64;
    bool hard_transmit = false;
    double image_snr_db = -16.0;
    std::size_t timing_bits = 200000;
};

struct ExperimentConfig {
    channel::ChannelSettings channel;
    std::size_t calibration_draws = 100000;
    model::ModelConfig model;
    train::TrainConfig train;
    dqn::DqnConfig dqn;
    EvalSettings eval;

    // One "path = value" line per field in a fixed order.
    std::string canonical() const;
    // FNV-1a 64 of canonical().
    std::uint64_t hash() const;
};

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::string& path);

std::string hex64(std::uint64_t v);
std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull);

}  // namespace aeat::io
