#pragma once

#include <array>

#include "aeat/numerics/rng.hpp"

namespace aeat::channel {

// Environment vector E = [Z, V_d, Cn2, sigma_s, sigma_a].
struct EnvParams {
    double Z = 1000.0;        // link distance, m
    double V_d = 13.0;        // visibility, km
    double Cn2 = 5e-14;       // refractive-index structure parameter, m^(-2/3)
    double sigma_s = 0.03;    // pointing-error standard deviation, m
    double sigma_a = 0.005;   // angular-jitter standard deviation, rad
};

// Sampling ranges for the environment (simulation settings table).
struct EnvRanges {
    double Z_min = 1000.0, Z_max = 5000.0;
    double V_min = 2.0, V_max = 13.0;
    std::array<double, 4> Cn2_levels = {5e-14, 1.7e-14, 5e-15, 4e-15};
    double sigma_s_min = 0.01, sigma_s_max = 0.05;
    double sigma_a_min = 0.002, sigma_a_max = 0.005;

    bool contains(const EnvParams& e) const;
};

// Z, V_d, sigma_s, sigma_a uniform on their intervals; Cn2 uniform over the
// discrete levels.
EnvParams sample_env(RngStream& rng, const EnvRanges& ranges = {});

}  // namespace aeat::channel
