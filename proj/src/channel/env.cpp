#include "aeat/channel/env.hpp"

#include <algorithm>

namespace aeat::channel {

namespace {
bool in_range(double v, double lo, double hi) { return v >= lo && v <= hi; }
}  // namespace

bool EnvRanges::contains(const EnvParams& e) const {
    const bool cn2_ok = std::find(Cn2_levels.begin(), Cn2_levels.end(), e.Cn2) != Cn2_levels.end();
    return in_range(e.Z, Z_min, Z_max) && in_range(e.V_d, V_min, V_max) && cn2_ok &&
           in_range(e.sigma_s, sigma_s_min, sigma_s_max) &&
           in_range(e.sigma_a, sigma_a_min, sigma_a_max);
}

EnvParams sample_env(RngStream& rng, const EnvRanges& r) {
    EnvParams e;
    e.Z = rng.uniform(r.Z_min, r.Z_max);
    e.V_d = rng.uniform(r.V_min, r.V_max);
    e.Cn2 = r.Cn2_levels[rng.below(r.Cn2_levels.size())];
    e.sigma_s = rng.uniform(r.sigma_s_min, r.sigma_s_max);
    e.sigma_a = rng.uniform(r.sigma_a_min, r.sigma_a_max);
    return e;
}

}  // namespace aeat::channel
