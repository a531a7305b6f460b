#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "aeat/channel/channel.hpp"

namespace aeat::channel {

struct CheckResult {
    std::string name;
    double value = 0.0;      // measured statistic
    double reference = 0.0;  // what it is compared against
    double tolerance = 0.0;
    bool pass = false;
    std::string detail;
};

struct VerifySizes {
    std::size_t turbulence = 1000000;
    std::size_t pointing = 1000000;
    std::size_t aoa = 10000000;
    std::size_t composite = 1000000;
    std::size_t env = 100000;
};

// Statistical self-checks of the channel samplers against closed forms and
// quadrature. Sampling is split into fixed chunks with derived streams, so
// the result does not depend on the OpenMP thread count.
std::vector<CheckResult> verify_channel(const ChannelModel& model, std::uint64_t seed,
                                        const VerifySizes& sizes = {});

// Two-sided Kolmogorov-Smirnov statistic of sorted samples against cdf.
template <class Cdf>
double ks_statistic(const std::vector<double>& sorted, Cdf&& cdf) {
    const double n = double(sorted.size());
    double d = 0.0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
        const double f = cdf(sorted[i]);
        d = std::max(d, std::max(f - double(i) / n, double(j + 1) / n - f));
        i = j + 1;
    }
    return d;
}

}  // namespace aeat::channel
