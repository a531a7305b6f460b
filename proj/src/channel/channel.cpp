#include "aeat/channel/channel.hpp"

#include <cmath>

#include "aeat/numerics/special.hpp"

namespace aeat::channel {

double sample_pointing(RngStream& rng, double A0, double g) {
    return A0 * std::pow(rng.uniform_open(), 1.0 / (g * g));
}

double sample_aoa(RngStream& rng, double S) {
    if (S < 0.0 || S > 1.0) throw DomainError("sample_aoa: outage probability outside [0, 1]");
    return rng.uniform() < S ? 0.0 : 1.0;
}

ChannelModel::ChannelModel(const ChannelSettings& settings)
    : settings_(settings),
      malaga_(malaga_params(settings.consts)),
      table_(TurbulenceTable::build(malaga_, settings.table_nodes, settings.table_h_min, settings.table_h_max)) {}

double ChannelModel::attenuation(const EnvParams& env) const {
    return atmospheric_attenuation(env.Z, scattering_coefficient(env.V_d, consts().wavelength));
}

PointingParams ChannelModel::pointing(const EnvParams& env) const {
    const auto& c = consts();
    const double rho_c = coherence_length(env.Cn2, c.wavelength, env.Z, settings_.coherence);
    const double w_z = beam_width(env.Z, c.w_oz, c.wavelength, rho_c);
    return pointing_params(c.r_a, w_z, env.sigma_s);
}

double ChannelModel::outage_prob(const EnvParams& env) const {
    return aoa_outage_prob(consts().theta_fov, env.sigma_a);
}

ChannelDraw ChannelModel::sample(RngStream& rng, const EnvParams& env) const {
    return sample(rng, attenuation(env), pointing(env), outage_prob(env));
}

ChannelDraw ChannelModel::sample(RngStream& rng, double h_l, const PointingParams& pp, double S) const {
    ChannelDraw d;
    d.h_l = h_l;
    d.h_a = table_.sample(rng);
    d.h_p = sample_pointing(rng, pp.A0, pp.g);
    d.h_aoa = sample_aoa(rng, S);
    d.h = d.h_l * d.h_a * d.h_p * d.h_aoa;
    return d;
}

std::vector<double> apply_channel(std::span<const double> x, double h, double amplitude, double sigma_w,
                                  RngStream& rng) {
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = amplitude * h * x[i] + sigma_w * rng.normal();
    return y;
}

double SnrReference::amplitude(double snr_db) const {
    return sigma_w * std::pow(10.0, snr_db / 20.0) / mean_h;
}

SnrReference calibrate_snr(const ChannelModel& model, std::uint64_t seed, std::size_t draws) {
    RngStream rng(seed);
    double sum = 0.0;
    for (std::size_t i = 0; i < draws; ++i) {
        const EnvParams env = sample_env(rng, model.settings().ranges);
        sum += model.sample(rng, env).h;
    }
    SnrReference ref;
    ref.mean_h = sum / static_cast<double>(draws);
    ref.sigma_w = std::sqrt(model.consts().sigma_w2);
    return ref;
}

}  // namespace aeat::channel
