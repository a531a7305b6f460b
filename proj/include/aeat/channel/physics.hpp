#pragma once

// Closed-form pieces of the UAV-FSO composite fading model:
// Beer-Lambert attenuation, turbulence strength, beam spreading, pointing
// loss geometry and angle-of-arrival outage.

namespace aeat::channel {

struct ChannelConstants {
    double eta_e = 0.5;             // photodetector responsivity
    double sigma_w2 = 1e-10;        // noise variance
    double wavelength = 1550e-9;    // m
    double r_a = 0.1;               // receiver lens radius, m
    double w_oz = 2.0;              // beamwidth at Z = 0, m
    double theta_fov = 0.020;       // field of view, rad
    double alpha = 8.2;             // Malaga large-scale parameter
    int beta = 4;                   // Malaga fading parameter (integer)
    double b0 = 0.1079;             // half of the total scatter power
    double rho_malaga = 0.596;      // coupling factor in the coherent power
    double Omega = 1.3265;          // line-of-sight power
    double phase_diff = 1.5707963267948966;  // phi_A - phi_B

    void validate() const;
};

enum class CoherenceVariant {
    standard_k,   // (0.55 Cn2 k^2 Z)^(-3/5), k = 2 pi / lambda
    paper_lambda  // (0.55 Cn2 lambda^2 Z)^(-3/5), literal printed form
};

// Kim visibility model, 1/km. wavelength in metres, V_d in km.
double scattering_coefficient(double V_d_km, double wavelength);
// exp(-(Z/1000) xi) with Z in metres and xi in 1/km.
double atmospheric_attenuation(double Z, double xi);
double rytov_variance(double Cn2, double wavelength, double Z);
double coherence_length(double Cn2, double wavelength, double Z,
                        CoherenceVariant variant = CoherenceVariant::standard_k);
double beam_width(double Z, double w_oz, double wavelength, double rho_c);

struct PointingParams {
    double w_z = 0.0;
    double v = 0.0;
    double A0 = 0.0;
    double w_zeq = 0.0;
    double g = 0.0;
};

PointingParams pointing_params(double r_a, double w_z, double sigma_s);

// S = exp(-theta_fov^2 / (2 sigma_a^2)): probability that the arrival angle
// leaves the field of view.
double aoa_outage_prob(double theta_fov, double sigma_a);

// Angular jitter from UAV boresight angles and orientation deviations.
double compute_sigma_a(double theta_tx_p, double theta_ty_p, double sigma_txo, double sigma_tyo);

}  // namespace aeat::channel
