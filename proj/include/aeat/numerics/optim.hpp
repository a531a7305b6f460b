#pragma once

#include <cstdint>
#include <vector>

#include "aeat/numerics/tensor.hpp"

namespace aeat {

struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

// First/second moment estimates, one tensor per ParamStore entry.
struct AdamWState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    std::uint64_t step = 0;

    static AdamWState zeros_like(const ParamStore& params);
};

// Decoupled weight decay followed by a bias-corrected Adam step, using the
// gradients currently held in the store.
void adamw_step(ParamStore& params, AdamWState& state, double lr, const AdamWConfig& cfg);

// lr_min + (lr_max - lr_min) * (1 + cos(pi * step / total)) / 2
double cosine_lr(std::uint64_t step, std::uint64_t total_steps, double lr_max, double lr_min);

}  // namespace aeat
