#include "aeat/numerics/optim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace aeat {

AdamWState AdamWState::zeros_like(const ParamStore& params) {
    AdamWState s;
    for (const auto& e : params.entries()) {
        s.m.emplace_back(e.value.rows, e.value.cols);
        s.v.emplace_back(e.value.rows, e.value.cols);
    }
    return s;
}

void adamw_step(ParamStore& params, AdamWState& state, double lr, const AdamWConfig& cfg) {
    auto& entries = params.entries();
    if (state.m.size() != entries.size()) {
        throw std::invalid_argument("adamw_step: optimizer state does not match parameter store");
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    const double decay = 1.0 - lr * cfg.weight_decay;
    for (std::size_t k = 0; k < entries.size(); ++k) {
        auto& w = entries[k].value.data;
        const auto& g = entries[k].grad.data;
        auto& m = state.m[k].data;
        auto& v = state.v[k].data;
        for (std::size_t i = 0; i < w.size(); ++i) {
            w[i] *= decay;
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.eps);
        }
    }
}

double cosine_lr(std::uint64_t step, std::uint64_t total_steps, double lr_max, double lr_min) {
    if (total_steps == 0) return lr_max;
    if (step > total_steps) step = total_steps;
    const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(std::numbers::pi * frac));
}

}  // namespace aeat
