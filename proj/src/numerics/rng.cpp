#include "aeat/numerics/rng.hpp"

#include <cmath>
#include <numbers>

namespace aeat {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t RngStream::next_u64() {
    ++counter_;
    return mix64(seed_ + counter_ * kGolden);
}

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double RngStream::normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RngStream::below(std::uint64_t n) {
    // Lemire's multiply-shift with rejection of the biased low range.
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        const unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
        if (static_cast<std::uint64_t>(m) >= threshold) {
            return static_cast<std::uint64_t>(m >> 64);
        }
    }
}

RngStream RngStream::derive(std::uint64_t index) const {
    return RngStream(mix64(seed_ ^ mix64(index + 0xD1B54A32D192ED03ULL)), 0);
}

}  // namespace aeat
