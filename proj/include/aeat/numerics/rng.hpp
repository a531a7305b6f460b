#pragma once

#include <cstdint>

namespace aeat {

// Counter-based random stream. Output k is a pure function of (seed, k), so
// streams can be split per block/trial without any shared state.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 0, std::uint64_t counter = 0)
        : seed_(seed), counter_(counter) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64();

    // Uniform on [0, 1) with 53 bits of resolution.
    double uniform();
    // Uniform on (0, 1].
    double uniform_open();
    double uniform(double lo, double hi);
    // Standard normal (Box-Muller, one value per two uniforms).
    double normal();
    // Uniform integer on [0, n).
    std::uint64_t below(std::uint64_t n);
    bool bernoulli(double p) { return uniform() < p; }

    // Independent child stream keyed by index; does not advance this stream.
    RngStream derive(std::uint64_t index) const;

private:
    std::uint64_t seed_;
    std::uint64_t counter_;
};

std::uint64_t mix64(std::uint64_t z);

}  // namespace aeat
