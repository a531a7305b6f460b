#include "aeat/channel/verify.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <functional>

#include "aeat/numerics/special.hpp"

namespace aeat::channel {
namespace {

constexpr std::size_t kChunks = 64;

// Runs fn(rng, begin, end, chunk) over kChunks contiguous ranges of [0, n),
// chunk c drawing from root.derive(c).
void for_chunks(std::size_t n, const RngStream& root,
                const std::function<void(RngStream&, std::size_t, std::size_t, std::size_t)>& fn) {
#pragma omp parallel for schedule(dynamic)
    for (std::size_t c = 0; c < kChunks; ++c) {
        RngStream rng = root.derive(c);
        fn(rng, n * c / kChunks, n * (c + 1) / kChunks, c);
    }
}

double sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

CheckResult within_rel(std::string name, double value, double reference, double tol) {
    CheckResult r{std::move(name), value, reference, tol, false, "relative"};
    r.pass = std::fabs(value - reference) <= tol * std::fabs(reference);
    return r;
}

CheckResult within_abs(std::string name, double value, double reference, double tol, std::string detail) {
    CheckResult r{std::move(name), value, reference, tol, false, std::move(detail)};
    r.pass = std::fabs(value - reference) <= tol;
    return r;
}

}  // namespace

std::vector<CheckResult> verify_channel(const ChannelModel& model, std::uint64_t seed, const VerifySizes& sizes) {
    std::vector<CheckResult> out;
    const RngStream master(seed);
    const MalagaParams& p = model.malaga();
    const TurbulenceTable& table = model.turbulence();

    auto pdf = [&p](double h) { return malaga_pdf(h, p); };
    double mass = 0.0, qmean = 0.0;
    const double edges[] = {0.0, 1.0, 3.0, 10.0, model.settings().table_h_max};
    for (int i = 0; i < 4; ++i) {
        mass += integrate(pdf, edges[i], edges[i + 1], 1e-11);
        qmean += integrate([&](double h) { return h * pdf(h); }, edges[i], edges[i + 1], 1e-11);
    }
    out.push_back(within_abs("pdf_normalization", mass, 1.0, 1e-3, "absolute"));

    {
        const std::size_t n = sizes.turbulence;
        std::vector<double> samples(n);
        for_chunks(n, master.derive(0), [&](RngStream& rng, std::size_t b, std::size_t e, std::size_t) {
            for (std::size_t i = b; i < e; ++i) samples[i] = table.sample(rng);
        });
        const double mean = sum(samples) / double(n);
        std::sort(samples.begin(), samples.end());
        const double ks = ks_statistic(samples, [&table](double h) { return table.cdf(h); });
        out.push_back({"turbulence_ks", ks, 0.0, 0.005, ks < 0.005, "KS statistic against the tabulated CDF"});
        out.push_back(within_rel("turbulence_mean", mean, qmean, 0.005));
    }

    const EnvParams ref_env;  // Z = 1000 m, sigma_s = 0.03 m, sigma_a = 5 mrad
    {
        const PointingParams pp = model.pointing(ref_env);
        const double g2 = pp.g * pp.g;
        const std::size_t n = sizes.pointing;
        std::vector<double> sums(kChunks, 0.0);
        std::vector<std::array<double, 3>> below(kChunks, {0.0, 0.0, 0.0});
        const double q[3] = {0.25, 0.5, 0.75};
        for_chunks(n, master.derive(1), [&](RngStream& rng, std::size_t b, std::size_t e, std::size_t c) {
            for (std::size_t i = b; i < e; ++i) {
                const double h = sample_pointing(rng, pp.A0, pp.g);
                sums[c] += h;
                for (int k = 0; k < 3; ++k) below[c][k] += h <= q[k] * pp.A0 ? 1.0 : 0.0;
            }
        });
        out.push_back(within_rel("pointing_mean", sum(sums) / double(n), pp.A0 * g2 / (g2 + 1.0), 0.005));
        for (int k = 0; k < 3; ++k) {
            double cnt = 0.0;
            for (const auto& bc : below) cnt += bc[k];
            char name[48];
            std::snprintf(name, sizeof name, "pointing_cdf_%.2f", q[k]);
            out.push_back(within_abs(name, cnt / double(n), std::pow(q[k], g2), 1e-3, "absolute"));
        }
    }

    {
        const double S = aoa_outage_prob(model.consts().theta_fov, ref_env.sigma_a);
        const std::size_t n = sizes.aoa;
        std::vector<double> zeros(kChunks, 0.0);
        for_chunks(n, master.derive(2), [&](RngStream& rng, std::size_t b, std::size_t e, std::size_t c) {
            for (std::size_t i = b; i < e; ++i) zeros[c] += sample_aoa(rng, S) == 0.0 ? 1.0 : 0.0;
        });
        const double sd = std::sqrt(S * (1.0 - S) / double(n));
        out.push_back(within_abs("aoa_outage_rate", sum(zeros) / double(n), S, 3.0 * sd, "3 binomial sd"));
    }

    {
        const double h_l = model.attenuation(ref_env);
        const PointingParams pp = model.pointing(ref_env);
        const double S = model.outage_prob(ref_env);
        const std::size_t n = sizes.composite;
        std::vector<std::array<double, 5>> acc(kChunks, {0.0, 0.0, 0.0, 0.0, 0.0});
        for_chunks(n, master.derive(3), [&](RngStream& rng, std::size_t b, std::size_t e, std::size_t c) {
            for (std::size_t i = b; i < e; ++i) {
                const ChannelDraw d = model.sample(rng, h_l, pp, S);
                acc[c][0] += d.h;
                acc[c][1] += d.h_l;
                acc[c][2] += d.h_a;
                acc[c][3] += d.h_p;
                acc[c][4] += d.h_aoa;
            }
        });
        std::array<double, 5> tot{};
        for (const auto& a : acc)
            for (int k = 0; k < 5; ++k) tot[k] += a[k];
        const double nn = double(n);
        const double product = (tot[1] / nn) * (tot[2] / nn) * (tot[3] / nn) * (tot[4] / nn);
        out.push_back(within_rel("composite_moment_factorization", tot[0] / nn, product, 0.01));
    }

    {
        const EnvRanges& r = model.settings().ranges;
        const std::size_t n = sizes.env;
        std::vector<std::array<double, 9>> acc(kChunks, std::array<double, 9>{});
        for_chunks(n, master.derive(4), [&](RngStream& rng, std::size_t b, std::size_t e, std::size_t c) {
            for (std::size_t i = b; i < e; ++i) {
                const EnvParams env = sample_env(rng, r);
                acc[c][0] += r.contains(env) ? 0.0 : 1.0;
                acc[c][1] += env.Z;
                acc[c][2] += env.V_d;
                acc[c][3] += env.sigma_s;
                acc[c][4] += env.sigma_a;
                for (std::size_t k = 0; k < 4; ++k) acc[c][5 + k] += env.Cn2 == r.Cn2_levels[k] ? 1.0 : 0.0;
            }
        });
        std::array<double, 9> tot{};
        for (const auto& a : acc)
            for (int k = 0; k < 9; ++k) tot[k] += a[k];
        const double nn = double(n);
        out.push_back({"env_in_range", tot[0], 0.0, 0.0, tot[0] == 0.0, "draws outside the ranges"});
        out.push_back(within_rel("env_mean_Z", tot[1] / nn, 0.5 * (r.Z_min + r.Z_max), 0.01));
        out.push_back(within_rel("env_mean_V_d", tot[2] / nn, 0.5 * (r.V_min + r.V_max), 0.01));
        out.push_back(within_rel("env_mean_sigma_s", tot[3] / nn, 0.5 * (r.sigma_s_min + r.sigma_s_max), 0.01));
        out.push_back(within_rel("env_mean_sigma_a", tot[4] / nn, 0.5 * (r.sigma_a_min + r.sigma_a_max), 0.01));
        const double sd = std::sqrt(nn * 0.25 * 0.75);
        for (int k = 0; k < 4; ++k)
            out.push_back(within_abs("env_Cn2_level_" + std::to_string(k), tot[5 + k], 0.25 * nn, 3.0 * sd,
                                     "count, 3 multinomial sd"));
    }
    return out;
}

}  // namespace aeat::channel
