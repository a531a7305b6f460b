#pragma once

// Classical reference curves: on-off keying over AWGN and a hard-decision
// Hamming(7,4) code.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace aeat::eval {

// Levels {0, a} with unit-variance noise, threshold a/2, SNR_dB = 20 log10 a:
// BER = Q(sqrt(SNR_lin) / 2).
double ook_theoretical_ber(double snr_db);

struct CountResult {
    std::uint64_t bits = 0;
    std::uint64_t errors = 0;
    double ber() const { return bits ? static_cast<double>(errors) / static_cast<double>(bits) : 0.0; }
};

CountResult ook_awgn_ber(double snr_db, std::uint64_t n_bits, std::uint64_t seed);

// Systematic code: c = [d1 d2 d3 d4 p1 p2 p3] with
//   p1 = d1^d2^d4, p2 = d1^d3^d4, p3 = d2^d3^d4.
std::vector<std::uint8_t> hamming74_encode(std::span<const std::uint8_t> bits);
// Corrects at most one error per codeword by syndrome lookup.
std::vector<std::uint8_t> hamming74_decode(std::span<const std::uint8_t> code);

// Random data through encode -> BSC(p) -> decode; counts data-bit errors.
CountResult hamming74_bsc_ber(double p, std::uint64_t n_codewords, std::uint64_t seed);

}  // namespace aeat::eval
