#include "aeat/eval/baselines.hpp"

#include <cmath>
#include <stdexcept>

#include "aeat/numerics/rng.hpp"
#include "aeat/numerics/special.hpp"

namespace aeat::eval {

double ook_theoretical_ber(double snr_db) {
    const double a = std::pow(10.0, snr_db / 20.0);
    return gaussian_q(a / 2.0);
}

CountResult ook_awgn_ber(double snr_db, std::uint64_t n_bits, std::uint64_t seed) {
    const double a = std::pow(10.0, snr_db / 20.0);
    RngStream rng(seed);
    CountResult r;
    r.bits = n_bits;
    for (std::uint64_t i = 0; i < n_bits; ++i) {
        const bool bit = rng.next_u64() >> 63;
        const double y = (bit ? a : 0.0) + rng.normal();
        r.errors += static_cast<std::uint64_t>((y > a / 2.0) != bit);
    }
    return r;
}

namespace {

// Syndrome (p1, p2, p3 checks as bits 0..2) -> flipped position, or -1.
constexpr int kSyndromePos[8] = {-1, 4, 5, 0, 6, 1, 2, 3};

}  // namespace

std::vector<std::uint8_t> hamming74_encode(std::span<const std::uint8_t> bits) {
    if (bits.size() % 4 != 0) throw std::invalid_argument("hamming74_encode: length must be a multiple of 4");
    std::vector<std::uint8_t> out;
    out.reserve(bits.size() / 4 * 7);
    for (std::size_t i = 0; i < bits.size(); i += 4) {
        const std::uint8_t d1 = bits[i] & 1, d2 = bits[i + 1] & 1, d3 = bits[i + 2] & 1, d4 = bits[i + 3] & 1;
        out.insert(out.end(), {d1, d2, d3, d4, static_cast<std::uint8_t>(d1 ^ d2 ^ d4),
                               static_cast<std::uint8_t>(d1 ^ d3 ^ d4), static_cast<std::uint8_t>(d2 ^ d3 ^ d4)});
    }
    return out;
}

std::vector<std::uint8_t> hamming74_decode(std::span<const std::uint8_t> code) {
    if (code.size() % 7 != 0) throw std::invalid_argument("hamming74_decode: length must be a multiple of 7");
    std::vector<std::uint8_t> out;
    out.reserve(code.size() / 7 * 4);
    for (std::size_t i = 0; i < code.size(); i += 7) {
        std::uint8_t c[7];
        for (int j = 0; j < 7; ++j) c[j] = code[i + j] & 1;
        const int s = (c[0] ^ c[1] ^ c[3] ^ c[4]) | (c[0] ^ c[2] ^ c[3] ^ c[5]) << 1 | (c[1] ^ c[2] ^ c[3] ^ c[6]) << 2;
        if (kSyndromePos[s] >= 0) c[kSyndromePos[s]] ^= 1;
        out.insert(out.end(), c, c + 4);
    }
    return out;
}

CountResult hamming74_bsc_ber(double p, std::uint64_t n_codewords, std::uint64_t seed) {
    RngStream rng(seed);
    CountResult r;
    std::uint8_t data[4];
    std::uint8_t rx[7];
    for (std::uint64_t w = 0; w < n_codewords; ++w) {
        for (auto& d : data) d = static_cast<std::uint8_t>(rng.next_u64() >> 63);
        const auto code = hamming74_encode(data);
        for (int j = 0; j < 7; ++j) rx[j] = code[j] ^ static_cast<std::uint8_t>(rng.uniform() < p);
        const auto dec = hamming74_decode(rx);
        for (int j = 0; j < 4; ++j) r.errors += static_cast<std::uint64_t>(dec[j] != data[j]);
        r.bits += 4;
    }
    return r;
}

}  // namespace aeat::eval
