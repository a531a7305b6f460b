#pragma once

// Central finite-difference oracle for tape-built scalar functions.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "aeat/numerics/autodiff.hpp"

namespace aeat::testing {

using LossFn = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

inline double eval_loss(const std::vector<Tensor>& inputs, const LossFn& f) {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const auto& t : inputs) vars.push_back(tape.constant(t));
    return f(tape, vars).value().data[0];
}

// Largest |analytic - numeric| / max(|analytic|, |numeric|, floor) over every
// input element. Step is 1e-5 (1 + |x|).
inline double max_fd_rel_error(std::vector<Tensor> inputs, const LossFn& f, double floor = 1e-6) {
    std::vector<Tensor> analytic;
    {
        ad::Tape tape;
        std::vector<ad::Var> vars;
        for (const auto& t : inputs) vars.push_back(tape.leaf(t));
        tape.backward(f(tape, vars));
        for (const auto& v : vars) {
            analytic.push_back(v.grad().size() ? v.grad() : Tensor(v.rows(), v.cols()));
        }
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        for (std::size_t i = 0; i < inputs[k].size(); ++i) {
            const double x = inputs[k].data[i];
            const double h = 1e-5 * (1.0 + std::fabs(x));
            inputs[k].data[i] = x + h;
            const double up = eval_loss(inputs, f);
            inputs[k].data[i] = x - h;
            const double dn = eval_loss(inputs, f);
            inputs[k].data[i] = x;
            const double num = (up - dn) / (2.0 * h);
            const double a = analytic[k].data[i];
            const double denom = std::max({std::fabs(a), std::fabs(num), floor});
            worst = std::max(worst, std::fabs(a - num) / denom);
        }
    }
    return worst;
}

inline Tensor random_tensor(std::size_t r, std::size_t c, RngStream& rng, double scale = 1.0) {
    Tensor t(r, c);
    for (auto& v : t.data) v = scale * rng.normal();
    return t;
}

}  // namespace aeat::testing
