#pragma once

#include <span>
#include <vector>

#include "aeat/channel/env.hpp"
#include "aeat/channel/malaga.hpp"
#include "aeat/channel/physics.hpp"
#include "aeat/numerics/rng.hpp"

namespace aeat::channel {

// One realisation of the composite coefficient h = h_l h_a h_p h_aoa.
struct ChannelDraw {
    double h_l = 1.0;
    double h_a = 1.0;
    double h_p = 1.0;
    double h_aoa = 1.0;
    double h = 1.0;
};

// h_p = A0 u^(1/g^2), u ~ U(0, 1].
double sample_pointing(RngStream& rng, double A0, double g);
// 0 with probability S, else 1.
double sample_aoa(RngStream& rng, double S);

struct ChannelSettings {
    ChannelConstants consts;
    EnvRanges ranges;
    CoherenceVariant coherence = CoherenceVariant::standard_k;
    std::size_t table_nodes = 4096;
    double table_h_min = 1e-6;
    double table_h_max = 60.0;
};

// Owns the tabulated turbulence sampler; everything else is closed form.
class ChannelModel {
public:
    explicit ChannelModel(const ChannelSettings& settings = {});

    const ChannelSettings& settings() const { return settings_; }
    const ChannelConstants& consts() const { return settings_.consts; }
    const MalagaParams& malaga() const { return malaga_; }
    const TurbulenceTable& turbulence() const { return table_; }

    double attenuation(const EnvParams& env) const;
    PointingParams pointing(const EnvParams& env) const;
    double outage_prob(const EnvParams& env) const;

    // Draw order from rng: turbulence, pointing, AoA.
    ChannelDraw sample(RngStream& rng, const EnvParams& env) const;
    // Same, but with the deterministic attenuation and pointing geometry
    // already computed for env.
    ChannelDraw sample(RngStream& rng, double h_l, const PointingParams& pp, double S) const;

private:
    ChannelSettings settings_;
    MalagaParams malaga_;
    TurbulenceTable table_;
};

// y_i = amplitude h x_i + w_i, w_i ~ N(0, sigma_w^2).
std::vector<double> apply_channel(std::span<const double> x, double h, double amplitude, double sigma_w,
                                  RngStream& rng);

// Received-SNR reference: SNR_dB = 20 log10(amplitude E[h] / sigma_w), with
// E[h] estimated from calibration draws over the environment distribution.
struct SnrReference {
    double mean_h = 1.0;
    double sigma_w = 1e-5;
    double amplitude(double snr_db) const;
    // 1 / (amplitude E[h]): normalisation applied at the receiver.
    double rx_scale(double snr_db) const { return 1.0 / (amplitude(snr_db) * mean_h); }
};

SnrReference calibrate_snr(const ChannelModel& model, std::uint64_t seed, std::size_t draws = 100000);

}  // namespace aeat::channel
