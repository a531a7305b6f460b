#include "aeat/channel/physics.hpp"

#include <cmath>
#include <numbers>

#include "aeat/numerics/special.hpp"

namespace aeat::channel {

namespace {
void require_positive(double v, const char* what) {
    if (!(v > 0.0)) throw DomainError(what);
}
}  // namespace

void ChannelConstants::validate() const {
    require_positive(eta_e, "ChannelConstants: eta_e must be positive");
    require_positive(sigma_w2, "ChannelConstants: sigma_w2 must be positive");
    require_positive(wavelength, "ChannelConstants: wavelength must be positive");
    require_positive(r_a, "ChannelConstants: r_a must be positive");
    require_positive(w_oz, "ChannelConstants: w_oz must be positive");
    require_positive(theta_fov, "ChannelConstants: theta_fov must be positive");
    require_positive(alpha, "ChannelConstants: alpha must be positive");
    require_positive(b0, "ChannelConstants: b0 must be positive");
    require_positive(Omega, "ChannelConstants: Omega must be positive");
    if (beta < 1) throw DomainError("ChannelConstants: beta must be a positive integer");
    if (rho_malaga < 0.0 || rho_malaga > 1.0) throw DomainError("ChannelConstants: rho must lie in [0, 1]");
}

double scattering_coefficient(double V_d_km, double wavelength) {
    require_positive(V_d_km, "scattering_coefficient: visibility must be positive");
    require_positive(wavelength, "scattering_coefficient: wavelength must be positive");
    double q = 0.0;
    if (V_d_km > 50.0) {
        q = 1.6;
    } else if (V_d_km > 6.0) {
        q = 1.3;
    } else if (V_d_km > 1.0) {
        q = 0.16 * V_d_km + 0.34;
    } else if (V_d_km > 0.5) {
        q = V_d_km - 0.5;
    }
    const double lambda_nm = wavelength * 1e9;
    return (3.91 / V_d_km) * std::pow(lambda_nm / 550.0, -q);
}

double atmospheric_attenuation(double Z, double xi) {
    if (Z < 0.0 || xi < 0.0) throw DomainError("atmospheric_attenuation: inputs must be non-negative");
    return std::exp(-(Z / 1000.0) * xi);
}

double rytov_variance(double Cn2, double wavelength, double Z) {
    require_positive(Cn2, "rytov_variance: Cn2 must be positive");
    require_positive(wavelength, "rytov_variance: wavelength must be positive");
    if (Z < 0.0) throw DomainError("rytov_variance: distance must be non-negative");
    const double k = 2.0 * std::numbers::pi / wavelength;
    return 1.23 * Cn2 * std::pow(k, 7.0 / 6.0) * std::pow(Z, 11.0 / 6.0);
}

double coherence_length(double Cn2, double wavelength, double Z, CoherenceVariant variant) {
    require_positive(Cn2, "coherence_length: Cn2 must be positive");
    require_positive(wavelength, "coherence_length: wavelength must be positive");
    require_positive(Z, "coherence_length: distance must be positive");
    const double k = 2.0 * std::numbers::pi / wavelength;
    const double sq = variant == CoherenceVariant::standard_k ? k * k : wavelength * wavelength;
    return std::pow(0.55 * Cn2 * sq * Z, -3.0 / 5.0);
}

double beam_width(double Z, double w_oz, double wavelength, double rho_c) {
    require_positive(w_oz, "beam_width: w_oz must be positive");
    require_positive(rho_c, "beam_width: coherence length must be positive");
    const double theta = 1.0 + 2.0 * w_oz * w_oz / (rho_c * rho_c);
    const double r = wavelength * Z / (std::numbers::pi * w_oz * w_oz);
    return w_oz * std::sqrt(1.0 + theta * r * r);
}

PointingParams pointing_params(double r_a, double w_z, double sigma_s) {
    require_positive(r_a, "pointing_params: r_a must be positive");
    require_positive(w_z, "pointing_params: w_z must be positive");
    require_positive(sigma_s, "pointing_params: sigma_s must be positive");
    PointingParams p;
    p.w_z = w_z;
    p.v = std::sqrt(std::numbers::pi / 2.0) * r_a / w_z;
    const double e = std::erf(p.v);
    p.A0 = e * e;
    const double w_zeq2 = w_z * w_z * std::sqrt(std::numbers::pi) * e / (2.0 * p.v * std::exp(-p.v * p.v));
    p.w_zeq = std::sqrt(w_zeq2);
    p.g = p.w_zeq / (2.0 * sigma_s);
    return p;
}

double aoa_outage_prob(double theta_fov, double sigma_a) {
    require_positive(theta_fov, "aoa_outage_prob: field of view must be positive");
    if (sigma_a < 0.0) throw DomainError("aoa_outage_prob: sigma_a must be non-negative");
    if (sigma_a == 0.0) return 0.0;
    return std::exp(-theta_fov * theta_fov / (2.0 * sigma_a * sigma_a));
}

double compute_sigma_a(double theta_tx_p, double theta_ty_p, double sigma_txo, double sigma_tyo) {
    require_positive(sigma_txo, "compute_sigma_a: sigma_txo must be positive");
    require_positive(sigma_tyo, "compute_sigma_a: sigma_tyo must be positive");
    const double s4x = std::pow(sigma_txo, 4), s4y = std::pow(sigma_tyo, 4);
    const double s6x = std::pow(sigma_txo, 6), s6y = std::pow(sigma_tyo, 6);
    const double var = std::cbrt(
        (3.0 * theta_tx_p * theta_tx_p * s4x + 3.0 * theta_ty_p * theta_ty_p * s4y + s6x + s6y) / 2.0);
    return std::sqrt(var);
}

}  // namespace aeat::channel
