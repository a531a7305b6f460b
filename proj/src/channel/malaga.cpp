#include "aeat/channel/malaga.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "aeat/numerics/special.hpp"

namespace aeat::channel {

namespace {

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

double factorial(int n) {
    double r = 1.0;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

}  // namespace

MalagaParams malaga_params(const ChannelConstants& c) {
    c.validate();
    MalagaParams p;
    p.alpha = c.alpha;
    p.beta = c.beta;
    const double two_b0 = 2.0 * c.b0;
    p.Omega_prime = c.Omega + c.rho_malaga * two_b0 +
                    2.0 * std::sqrt(two_b0 * c.Omega * c.rho_malaga) * std::cos(c.phase_diff);
    // cos(pi/2) evaluates to ~6e-17 in binary; the coupling term is exactly zero there.
    if (std::fabs(std::cos(c.phase_diff)) < 1e-15) p.Omega_prime = c.Omega + c.rho_malaga * two_b0;
    p.b = two_b0 * (1.0 - c.rho_malaga);

    const double a = c.alpha;
    const double beta = c.beta;
    const double gb = p.b * beta + p.Omega_prime;
    p.A = 2.0 * std::pow(a, a / 2.0) / (std::pow(p.b, 1.0 + a / 2.0) * std::tgamma(a)) *
          std::pow(p.b * beta / gb, beta + a / 2.0);
    for (int k = 1; k <= c.beta; ++k) {
        p.a_k.push_back(binomial(c.beta - 1, k - 1) * std::pow(gb, 1.0 - k / 2.0) / factorial(k - 1) *
                        std::pow(p.Omega_prime / p.b, k - 1) * std::pow(a / beta, k / 2.0));
    }
    return p;
}

double malaga_pdf(double h, const MalagaParams& p) {
    if (!(h > 0.0)) throw DomainError("malaga_pdf: h must be positive");
    const double arg = 2.0 * std::sqrt(p.alpha * p.beta * h / (p.b * p.beta + p.Omega_prime));
    double sum = 0.0;
    for (int k = 1; k <= p.beta; ++k) {
        sum += p.a_k[k - 1] * std::pow(h, (p.alpha + k) / 2.0 - 1.0) * bessel_k(p.alpha - k, arg);
    }
    return p.A * sum;
}

TurbulenceTable::TurbulenceTable(std::vector<double> grid, std::vector<double> cdf)
    : grid_(std::move(grid)), cdf_(std::move(cdf)) {
    if (grid_.size() < 2 || grid_.size() != cdf_.size()) {
        throw std::invalid_argument("TurbulenceTable: grid and cdf must have equal length >= 2");
    }
    for (std::size_t i = 1; i < grid_.size(); ++i) {
        if (!(grid_[i] > grid_[i - 1])) throw std::invalid_argument("TurbulenceTable: grid not increasing");
        if (cdf_[i] < cdf_[i - 1]) throw std::invalid_argument("TurbulenceTable: cdf not monotone");
    }
    if (!(grid_.front() > 0.0) || cdf_.front() < 0.0 || !(cdf_.back() > 0.0)) {
        throw std::invalid_argument("TurbulenceTable: invalid table endpoints");
    }
    raw_mass_ = cdf_.back();
    for (auto& v : cdf_) v /= raw_mass_;
}

TurbulenceTable TurbulenceTable::build(const MalagaParams& p, std::size_t nodes, double h_min, double h_max) {
    std::vector<double> grid(nodes), cdf(nodes);
    const double l0 = std::log(h_min), l1 = std::log(h_max);
    for (std::size_t i = 0; i < nodes; ++i) {
        grid[i] = std::exp(l0 + (l1 - l0) * static_cast<double>(i) / static_cast<double>(nodes - 1));
    }
    grid.front() = h_min;
    grid.back() = h_max;
    auto pdf = [&p](double h) { return malaga_pdf(h, p); };
    cdf[0] = integrate_gk15(pdf, 0.0, h_min);
    for (std::size_t i = 1; i < nodes; ++i) cdf[i] = cdf[i - 1] + integrate_gk15(pdf, grid[i - 1], grid[i]);
    return TurbulenceTable(std::move(grid), std::move(cdf));
}

double TurbulenceTable::inverse(double u) const {
    if (u <= cdf_.front()) return grid_.front();
    if (u >= 1.0) return grid_.back();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const std::size_t i = static_cast<std::size_t>(it - cdf_.begin());
    if (i >= cdf_.size()) return grid_.back();
    const double c0 = cdf_[i - 1], c1 = cdf_[i];
    const double t = c1 > c0 ? (u - c0) / (c1 - c0) : 0.0;
    return grid_[i - 1] + t * (grid_[i] - grid_[i - 1]);
}

double TurbulenceTable::cdf(double h) const {
    if (h < grid_.front()) return 0.0;
    if (h >= grid_.back()) return 1.0;
    const auto it = std::upper_bound(grid_.begin(), grid_.end(), h);
    const std::size_t i = static_cast<std::size_t>(it - grid_.begin());
    const double t = (h - grid_[i - 1]) / (grid_[i] - grid_[i - 1]);
    return cdf_[i - 1] + t * (cdf_[i] - cdf_[i - 1]);
}

double TurbulenceTable::mean() const {
    double m = cdf_.front() * grid_.front();
    for (std::size_t i = 1; i < grid_.size(); ++i) {
        m += (cdf_[i] - cdf_[i - 1]) * 0.5 * (grid_[i] + grid_[i - 1]);
    }
    return m;
}

}  // namespace aeat::channel
