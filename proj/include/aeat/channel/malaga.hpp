#pragma once

#include <cstddef>
#include <vector>

#include "aeat/channel/physics.hpp"
#include "aeat/numerics/rng.hpp"

namespace aeat::channel {

struct MalagaParams {
    double A = 0.0;
    std::vector<double> a_k;   // k = 1..beta
    double Omega_prime = 0.0;  // coherent power
    double b = 0.0;            // average scattering power 2 b0 (1 - rho)
    double alpha = 0.0;
    int beta = 0;
};

MalagaParams malaga_params(const ChannelConstants& consts);

// Malaga turbulence density at h > 0.
double malaga_pdf(double h, const MalagaParams& p);

// Inverse-transform sampler over a cumulative table built by quadrature of
// the density on a log-spaced grid. The first node carries the mass of
// (0, h_min]; between nodes the CDF is linear in h.
class TurbulenceTable {
public:
    TurbulenceTable(std::vector<double> grid, std::vector<double> cdf);

    static TurbulenceTable build(const MalagaParams& p, std::size_t nodes = 4096, double h_min = 1e-6,
                                 double h_max = 60.0);

    double sample(RngStream& rng) const { return inverse(rng.uniform()); }
    double inverse(double u) const;
    double cdf(double h) const;
    // Mean of the piecewise-linear-CDF distribution the sampler draws from.
    double mean() const;
    // Unnormalised mass captured by the table before normalisation.
    double raw_mass() const { return raw_mass_; }

    const std::vector<double>& grid() const { return grid_; }
    const std::vector<double>& cdf_values() const { return cdf_; }

private:
    std::vector<double> grid_;
    std::vector<double> cdf_;
    double raw_mass_ = 1.0;
};

}  // namespace aeat::channel
